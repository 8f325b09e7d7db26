#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "specseg/detector.hpp"
#include "specseg/simulate.hpp"

namespace specseg {

// One-sided Hausdorff distance sup_{b in targets} inf_{a in cover} |a - b|.
// Empty targets give 0; an empty cover with targets gives n.
inline double rho(const std::vector<int>& cover, const std::vector<int>& targets, int n) {
  if (targets.empty()) return 0.0;
  if (cover.empty()) return static_cast<double>(n);
  long long worst = 0;
  for (int b : targets) {
    long long nearest = std::numeric_limits<long long>::max();
    for (int a : cover) nearest = std::min(nearest, std::llabs(static_cast<long long>(a) - b));
    worst = std::max(worst, nearest);
  }
  return static_cast<double>(worst);
}

struct ReplicateRecord {
  int index = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  std::vector<int> truth;
  std::vector<int> estimate;
  int k_hat = 0;
  double rho_est_to_true = 0.0;  // raw, samples
  double rho_true_to_est = 0.0;
  double seconds = 0.0;
  // BIC runs only: enough to re-select K for another penalty exponent.
  std::optional<double> me_bic;
  std::vector<double> layer_objectives;
  std::vector<std::vector<int>> layer_change_points;
};

struct RuntimeStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double total = 0.0;
};

struct ReplicationSummary {
  std::string label;
  int n = 0;
  int reps = 0;
  int completed = 0;
  int failed = 0;
  std::optional<double> c;  // penalty exponent for BIC summaries
  double mean_rho_est_to_true_raw = 0.0;
  double mean_rho_true_to_est_raw = 0.0;
  double mean_rho_est_to_true = 0.0;  // raw / n
  double mean_rho_true_to_est = 0.0;
  double k_accuracy = 0.0;
  double mean_k_hat = 0.0;
  RuntimeStats runtime;
};

struct ReplicationOptions {
  int reps = 1;
  std::uint64_t seed0 = 0;
  std::optional<int> known_k;
  int jobs = 1;
  double max_failure_fraction = 0.01;
  std::string label;
};

inline void fill_metrics(ReplicateRecord& r, int n) {
  r.rho_est_to_true = rho(r.estimate, r.truth, n);
  r.rho_true_to_est = rho(r.truth, r.estimate, n);
}

// Simulates and segments replicate `index` (seed seed0 + index).
inline ReplicateRecord run_replicate(const PiecewiseSpec& spec, const DetectorConfig& cfg,
                                     const ReplicationOptions& opt, int index) {
  ReplicateRecord rec;
  rec.index = index;
  rec.seed = opt.seed0 + static_cast<std::uint64_t>(index);
  const auto start = std::chrono::steady_clock::now();
  try {
    auto sim = simulate_piecewise(spec, rec.seed);
    rec.truth = sim.change_points;
    const Series series = center_series(sim.values);
    const auto det = detect(series, cfg, opt.known_k);
    rec.estimate = det.segmentation.change_points();
    rec.k_hat = det.k_hat;
    if (det.penalty && !det.layer_objectives.empty()) {
      rec.me_bic = det.penalty->me_bic;
      rec.layer_objectives = det.layer_objectives;
      for (const auto& layer : det.layers) {
        rec.layer_change_points.push_back(layer ? layer->change_points() : std::vector<int>{});
      }
    }
    fill_metrics(rec, series.n());
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.error = e.what();
  }
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

// Runs the replicates on `jobs` workers; records come back ordered by index.
// Throws DegenerateData when more than max_failure_fraction of them fail.
inline std::vector<ReplicateRecord> run_detections(const PiecewiseSpec& spec, const DetectorConfig& cfg,
                                                   const ReplicationOptions& opt) {
  if (opt.reps < 1) throw Error(ErrorCode::InvalidConfig, "reps must be >= 1");
  std::vector<ReplicateRecord> out(opt.reps);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < opt.reps; i = next++) out[i] = run_replicate(spec, cfg, opt, i);
  };
  const int jobs = std::clamp(opt.jobs, 1, opt.reps);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  const auto failed = std::count_if(out.begin(), out.end(), [](const auto& r) { return r.failed; });
  if (failed > opt.max_failure_fraction * opt.reps) {
    const auto first = std::find_if(out.begin(), out.end(), [](const auto& r) { return r.failed; });
    throw Error(ErrorCode::DegenerateData, std::to_string(failed) + " of " + std::to_string(opt.reps) +
                                               " replicates failed; first: " + first->error);
  }
  return out;
}

// Re-selects K for penalty exponent c from the stored layer objectives.
inline ReplicateRecord reselect(const ReplicateRecord& rec, double c, int n) {
  if (rec.failed) return rec;
  if (!rec.me_bic) throw Error(ErrorCode::InvalidConfig, "replicate carries no BIC layers");
  ReplicateRecord out = rec;
  out.k_hat = select_k(rec.layer_objectives, *rec.me_bic * std::pow(static_cast<double>(n), c));
  out.estimate = rec.layer_change_points[out.k_hat];
  fill_metrics(out, n);
  return out;
}

// Ordered reduction over completed replicates.
inline ReplicationSummary summarize(const std::vector<ReplicateRecord>& records, int n,
                                    std::string label = {}, std::optional<double> c = std::nullopt) {
  ReplicationSummary s;
  s.label = std::move(label);
  s.n = n;
  s.c = c;
  s.reps = static_cast<int>(records.size());
  double sum_a = 0.0, sum_b = 0.0, sum_k = 0.0;
  int hits = 0;
  bool first = true;
  for (const auto& r : records) {
    s.runtime.total += r.seconds;
    s.runtime.min = first ? r.seconds : std::min(s.runtime.min, r.seconds);
    s.runtime.max = first ? r.seconds : std::max(s.runtime.max, r.seconds);
    first = false;
    if (r.failed) {
      ++s.failed;
      continue;
    }
    ++s.completed;
    sum_a += r.rho_est_to_true;
    sum_b += r.rho_true_to_est;
    sum_k += r.k_hat;
    if (r.k_hat == static_cast<int>(r.truth.size())) ++hits;
  }
  if (s.reps > 0) s.runtime.mean = s.runtime.total / s.reps;
  if (s.completed == 0) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.mean_rho_est_to_true_raw = s.mean_rho_true_to_est_raw = nan;
    s.mean_rho_est_to_true = s.mean_rho_true_to_est = nan;
    s.k_accuracy = s.mean_k_hat = nan;
    return s;
  }
  s.mean_rho_est_to_true_raw = sum_a / s.completed;
  s.mean_rho_true_to_est_raw = sum_b / s.completed;
  s.mean_rho_est_to_true = s.mean_rho_est_to_true_raw / n;
  s.mean_rho_true_to_est = s.mean_rho_true_to_est_raw / n;
  s.k_accuracy = static_cast<double>(hits) / s.completed;
  s.mean_k_hat = sum_k / s.completed;
  return s;
}

inline ReplicationSummary run_replications(const PiecewiseSpec& spec, const DetectorConfig& cfg,
                                           const ReplicationOptions& opt) {
  const auto records = run_detections(spec, cfg, opt);
  std::optional<double> c;
  if (!opt.known_k) c = cfg.penalty_exponent;
  return summarize(records, spec.total_length(), opt.label, c);
}

// One BIC summary per exponent in cs, all from the same detections.
inline std::vector<ReplicationSummary> penalty_sweep(const std::vector<ReplicateRecord>& records, int n,
                                                     const std::vector<double>& cs,
                                                     const std::string& label = {}) {
  std::vector<ReplicationSummary> out;
  for (double c : cs) {
    std::vector<ReplicateRecord> re;
    re.reserve(records.size());
    for (const auto& r : records) re.push_back(reselect(r, c, n));
    out.push_back(summarize(re, n, label, c));
  }
  return out;
}

// lo, lo + step, ... up to hi (inclusive within half a step).
inline std::vector<double> sweep_values(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw Error(ErrorCode::InvalidConfig, "sweep needs lo <= hi and step > 0");
  std::vector<double> out;
  const int count = static_cast<int>(std::floor((hi - lo) / step + 0.5));
  for (int i = 0; i <= count; ++i) out.push_back(lo + i * step);
  return out;
}

namespace detail {

inline std::string printf_string(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace detail

// "22.99 (0.011)": raw distance with the n-normalized value in parentheses.
inline std::string rho_cell(double raw, int n) {
  return detail::printf_string("%.2f", raw) + " (" + detail::printf_string("%.3f", raw / n) + ")";
}

inline std::string table_report(const std::vector<ReplicationSummary>& rows, bool timing = false) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %6s %5s %6s %6s %-18s %-18s %9s %7s", "config", "N", "reps",
                "failed", "c", "rho(est|true)", "rho(true|est)", "K acc %", "mean K");
  os << line;
  if (timing) os << "   sec/rep";
  os << '\n';
  for (const auto& s : rows) {
    const std::string c = s.c ? detail::printf_string("%.2f", *s.c) : "-";
    std::snprintf(line, sizeof line, "%-16s %6d %5d %6d %6s %-18s %-18s %9.2f %7.3f", s.label.c_str(), s.n,
                  s.reps, s.failed, c.c_str(), rho_cell(s.mean_rho_est_to_true_raw, s.n).c_str(),
                  rho_cell(s.mean_rho_true_to_est_raw, s.n).c_str(), 100.0 * s.k_accuracy, s.mean_k_hat);
    os << line;
    if (timing) os << detail::printf_string("%10.3f", s.runtime.mean);
    os << '\n';
  }
  return os.str();
}

// Machine-readable rows: tab-separated, full precision, "-" for no c.
inline std::string summary_header() {
  return "label\tn\treps\tcompleted\tfailed\tc\trho_est_to_true_raw\trho_true_to_est_raw\t"
         "rho_est_to_true\trho_true_to_est\tk_accuracy\tmean_k_hat";
}

inline std::string summary_row(const ReplicationSummary& s) {
  auto g = [](double v) { return detail::printf_string("%.17g", v); };
  std::ostringstream os;
  os << (s.label.empty() ? "-" : s.label) << '\t' << s.n << '\t' << s.reps << '\t' << s.completed << '\t'
     << s.failed << '\t' << (s.c ? g(*s.c) : "-") << '\t' << g(s.mean_rho_est_to_true_raw) << '\t'
     << g(s.mean_rho_true_to_est_raw) << '\t' << g(s.mean_rho_est_to_true) << '\t'
     << g(s.mean_rho_true_to_est) << '\t' << g(s.k_accuracy) << '\t' << g(s.mean_k_hat);
  return os.str();
}

inline std::string summary_rows(const std::vector<ReplicationSummary>& rows) {
  std::string out = summary_header() + '\n';
  for (const auto& s : rows) out += summary_row(s) + '\n';
  return out;
}

inline ReplicationSummary parse_summary_row(const std::string& row) {
  std::vector<std::string> f;
  std::stringstream ss(row);
  std::string cell;
  while (std::getline(ss, cell, '\t')) f.push_back(cell);
  if (f.size() != 12) throw Error(ErrorCode::ParseError, "summary row needs 12 fields, got " + std::to_string(f.size()));
  auto num = [](const std::string& s) {
    if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "bad number '" + s + "' in summary row");
    }
  };
  ReplicationSummary s;
  s.label = f[0] == "-" ? "" : f[0];
  s.n = static_cast<int>(num(f[1]));
  s.reps = static_cast<int>(num(f[2]));
  s.completed = static_cast<int>(num(f[3]));
  s.failed = static_cast<int>(num(f[4]));
  if (f[5] != "-") s.c = num(f[5]);
  s.mean_rho_est_to_true_raw = num(f[6]);
  s.mean_rho_true_to_est_raw = num(f[7]);
  s.mean_rho_est_to_true = num(f[8]);
  s.mean_rho_true_to_est = num(f[9]);
  s.k_accuracy = num(f[10]);
  s.mean_k_hat = num(f[11]);
  return s;
}

}  // namespace specseg
