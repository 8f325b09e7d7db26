// specseg: detect, simulate, bench and spectrum subcommands.
//
// Exit codes: 0 ok, 1 I/O failure, 2 parse error, 3 infeasible or invalid
// configuration, 4 degenerate data.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "specseg/specseg.hpp"

using json = nlohmann::ordered_json;
using namespace specseg;

namespace {

struct Options {
  DetectorConfig cfg;
  std::string baseline = "pooled";
  std::string solver = "screen";
  std::optional<int> known_k;
  std::string band;
  std::string rows;
  std::string input;
  std::string output;
  std::string spectra;
  std::string spec_file;
  std::string noise = "gaussian";
  std::string boundaries;
  std::string sweep_c;
  std::optional<int> case_id;
  std::uint64_t seed = 0;
  int reps = 1;
  int jobs = 0;
  bool no_prune = false;
  bool timing = false;
};

[[noreturn]] void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::EmptyInput:
      return 2;
    case ErrorCode::ZeroSegment:
    case ErrorCode::ZeroMass:
    case ErrorCode::SupportMismatch:
    case ErrorCode::DegenerateData:
      return 4;
    default:
      return 3;
  }
}

std::vector<double> split_numbers(const std::string& text, char sep, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    double v = 0.0;
    if (!detail::parse_double(detail::trim(item), v)) {
      fail(ErrorCode::ParseError, flag + ": bad number '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

void add_detector_flags(CLI::App* app, Options& o) {
  app->add_option("--ml", o.cfg.ml, "minimum segment length")->capture_default_str();
  app->add_option("--kmax", o.cfg.k_max, "largest change-point count considered")->capture_default_str();
  app->add_option("--alpha", o.cfg.alpha, "bandwidth exponent, m = len^alpha")->capture_default_str();
  app->add_option("--baseline", o.baseline, "pooled | white")->capture_default_str();
  app->add_option("--grid", o.cfg.grid_size, "frequency grid size")->capture_default_str();
  app->add_option("--n-su", o.cfg.n_su, "search unit")->capture_default_str();
  app->add_option("--c", o.cfg.penalty_exponent, "penalty exponent")->capture_default_str();
  app->add_option("--solver", o.solver, "dp | screen | pelt | bic")->capture_default_str();
  app->add_option("--known-k", o.known_k, "fix the number of change points");
  app->add_option("--band", o.band, "restrict frequencies to lo:hi (radians)");
  app->add_option("--screen-window", o.cfg.screen_window, "screening window (default 2*ml)");
  app->add_flag("--no-prune", o.no_prune, "disable PELT pruning");
  app->add_flag("--timing", o.timing, "include runtime in outputs");
}

void finish_config(Options& o) {
  if (o.baseline == "pooled") {
    o.cfg.baseline = Baseline::Pooled;
  } else if (o.baseline == "white") {
    o.cfg.baseline = Baseline::WhiteNoise;
  } else {
    fail(ErrorCode::InvalidConfig, "--baseline must be pooled or white");
  }
  if (o.solver == "dp") {
    o.cfg.solver = Solver::DpKnownK;
  } else if (o.solver == "screen") {
    o.cfg.solver = Solver::Screening;
  } else if (o.solver == "pelt") {
    o.cfg.solver = Solver::Pelt;
  } else if (o.solver == "bic") {
    o.cfg.solver = Solver::BicExhaustive;
  } else {
    fail(ErrorCode::InvalidConfig, "--solver must be dp, screen, pelt or bic");
  }
  o.cfg.pelt_pruning = !o.no_prune;
}

FrequencyGrid grid_for(const Options& o) {
  auto grid = make_grid(o.cfg.grid_size);
  if (o.band.empty()) return grid;
  const auto lh = split_numbers(o.band, ':', "--band");
  if (lh.size() != 2) fail(ErrorCode::ParseError, "--band expects lo:hi");
  return restrict_band(grid, lh[0], lh[1]);
}

NoiseKind noise_for(const std::string& s) {
  if (s == "gaussian") return NoiseKind::Gaussian;
  if (s == "t4") return NoiseKind::ScaledT4;
  fail(ErrorCode::InvalidConfig, "--noise must be gaussian or t4");
}

std::vector<double> load_series(const Options& o) {
  auto values = read_column_csv(o.input);
  if (o.rows.empty()) return values;
  const auto ab = split_numbers(o.rows, ':', "--rows");
  if (ab.size() != 2 || ab[0] < 0 || ab[1] > static_cast<double>(values.size()) || ab[0] >= ab[1] ||
      ab[0] != std::floor(ab[0]) || ab[1] != std::floor(ab[1])) {
    fail(ErrorCode::ParseError, "--rows expects a:b with 0 <= a < b <= " + std::to_string(values.size()));
  }
  return {values.begin() + static_cast<long>(ab[0]), values.begin() + static_cast<long>(ab[1])};
}

PiecewiseSpec spec_for(const Options& o) {
  if (o.case_id && !o.spec_file.empty()) fail(ErrorCode::InvalidConfig, "give either --case or --spec");
  if (o.case_id) return case_spec(*o.case_id, noise_for(o.noise));
  if (o.spec_file.empty()) fail(ErrorCode::InvalidConfig, "need --case or --spec");
  std::ifstream in(o.spec_file);
  if (!in) fail(ErrorCode::ParseError, "cannot open '" + o.spec_file + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_piecewise_spec(ss.str());
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw std::runtime_error("cannot write '" + path + "'");
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_file(path, text);
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// lambda, then st(f_hat) for each segment.
std::string spectra_tsv(const ScoreOracle& oracle, const std::vector<int>& boundaries, double alpha) {
  std::vector<std::vector<double>> cols;
  for (std::size_t k = 1; k < boundaries.size(); ++k) {
    cols.push_back(normalize(segment_spectrum(oracle.table(), boundaries[k - 1], boundaries[k], alpha)));
  }
  const auto& g = oracle.table().grid();
  std::string out = "lambda";
  for (std::size_t k = 0; k < cols.size(); ++k) out += "\tsegment_" + std::to_string(k + 1);
  out += '\n';
  for (int i = 0; i < g.size(); ++i) {
    out += fmt(g.points[i]);
    for (const auto& c : cols) out += '\t' + fmt(c[i]);
    out += '\n';
  }
  return out;
}

json config_json(const Options& o) {
  json c;
  c["ml"] = o.cfg.ml;
  c["k_max"] = o.cfg.k_max;
  c["alpha"] = o.cfg.alpha;
  c["baseline"] = o.baseline;
  c["grid"] = o.cfg.grid_size;
  c["n_su"] = o.cfg.n_su;
  c["c"] = o.cfg.penalty_exponent;
  c["solver"] = o.solver;
  c["known_k"] = o.known_k ? json(*o.known_k) : json(nullptr);
  c["band"] = o.band.empty() ? json(nullptr) : json(o.band);
  c["rows"] = o.rows.empty() ? json(nullptr) : json(o.rows);
  c["screen_window"] = o.cfg.effective_screen_window();
  c["pelt_pruning"] = o.cfg.pelt_pruning;
  return c;
}

int cmd_detect(Options& o) {
  const auto start = std::chrono::steady_clock::now();
  finish_config(o);
  const Series series = center_series(load_series(o));
  validate_config(o.cfg, series.n());
  const ScoreOracle oracle(series, grid_for(o), o.cfg.baseline, o.cfg.alpha);
  const auto det = detect(oracle, o.cfg, o.known_k);
  const int n = series.n();
  const auto& b = det.segmentation.boundaries;

  json doc;
  doc["input"] = o.input;
  doc["n"] = n;
  doc["k_hat"] = det.k_hat;
  doc["change_points"] = det.segmentation.change_points();
  json fractions = json::array();
  for (int cp : det.segmentation.change_points()) fractions.push_back(static_cast<double>(cp) / n);
  doc["fractions"] = fractions;
  doc["boundaries"] = b;
  doc["objective"] = det.segmentation.objective;
  if (det.penalty) {
    doc["penalty"] = {{"me_bic", det.penalty->me_bic}, {"c", det.penalty->c}, {"c_n", det.penalty->c_n}};
  } else {
    doc["penalty"] = nullptr;
  }
  json layers = json::array();
  for (double v : det.layer_objectives) layers.push_back(number_or_null(v));
  doc["layer_objectives"] = layers;
  doc["candidates"] = det.candidates;
  doc["pelt_pruning"] = det.pruning;

  std::string spectra_path;
  if (!o.spectra.empty()) {
    spectra_path = o.spectra;
    write_file(spectra_path, spectra_tsv(oracle, b, o.cfg.alpha));
  }
  json segs = json::array();
  for (std::size_t k = 1; k < b.size(); ++k) {
    json s;
    s["start"] = b[k - 1];
    s["end"] = b[k];
    s["length"] = b[k] - b[k - 1];
    s["bandwidth"] = bandwidth_for(b[k] - b[k - 1], o.cfg.alpha);
    s["score"] = oracle.score(b[k - 1], b[k]);
    if (!spectra_path.empty()) {
      s["spectrum"] = {{"file", spectra_path}, {"column", "segment_" + std::to_string(k)}};
    }
    segs.push_back(s);
  }
  doc["segments"] = segs;
  doc["config"] = config_json(o);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (o.timing) doc["runtime_seconds"] = seconds;
  std::cerr << "detect: " << seconds << " s\n";
  emit(o.output, doc.dump(2) + '\n');
  return 0;
}

int cmd_simulate(Options& o) {
  const auto spec = spec_for(o);
  if (o.output.empty()) fail(ErrorCode::InvalidConfig, "simulate needs --output");
  const auto sim = simulate_piecewise(spec, o.seed);
  write_file(o.output, format_column_csv(sim.values));
  json truth;
  truth["n"] = spec.total_length();
  truth["seed"] = o.seed;
  truth["change_points"] = sim.change_points;
  json lengths = json::array();
  for (const auto& s : spec.segments) lengths.push_back(s.length);
  truth["segment_lengths"] = lengths;
  truth["spec"] = format_piecewise_spec(spec);
  write_file(o.output + ".truth.json", truth.dump(2) + '\n');
  return 0;
}

int cmd_bench(Options& o) {
  finish_config(o);
  const auto spec = spec_for(o);
  const int n = spec.total_length();
  validate_config(o.cfg, n);
  ReplicationOptions ro;
  ro.reps = o.reps;
  ro.seed0 = o.seed;
  ro.known_k = o.known_k;
  ro.jobs = o.jobs > 0 ? o.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  ro.label = o.case_id ? "case" + std::to_string(*o.case_id) : "spec";
  const auto start = std::chrono::steady_clock::now();
  const auto records = run_detections(spec, o.cfg, ro);
  std::vector<ReplicationSummary> rows;
  if (!o.sweep_c.empty()) {
    if (o.known_k || o.cfg.solver == Solver::Pelt) {
      fail(ErrorCode::InvalidConfig, "--sweep-c needs a BIC solver (screen or bic) without --known-k");
    }
    const auto v = split_numbers(o.sweep_c, ':', "--sweep-c");
    if (v.size() != 3) fail(ErrorCode::ParseError, "--sweep-c expects lo:hi:step");
    rows = penalty_sweep(records, n, sweep_values(v[0], v[1], v[2]), ro.label);
  } else {
    std::optional<double> c;
    if (!o.known_k) c = o.cfg.penalty_exponent;
    rows.push_back(summarize(records, n, ro.label, c));
  }
  std::cout << table_report(rows, o.timing);
  if (!o.output.empty()) write_file(o.output, summary_rows(rows));
  std::cerr << "bench: " << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
            << " s\n";
  return 0;
}

int cmd_spectrum(Options& o) {
  if (o.cfg.alpha < 0.25 || o.cfg.alpha >= 0.5) fail(ErrorCode::InvalidConfig, "alpha must lie in [1/4, 1/2)");
  const Series series = center_series(load_series(o));
  const int n = series.n();
  std::vector<int> b{0};
  if (!o.boundaries.empty()) {
    for (double v : split_numbers(o.boundaries, ',', "--boundaries")) {
      if (v != std::floor(v) || v <= b.back() || v >= n) {
        fail(ErrorCode::InvalidConfig, "--boundaries must be increasing integers inside (0, n)");
      }
      b.push_back(static_cast<int>(v));
    }
  }
  b.push_back(n);
  const ScoreOracle oracle(series, grid_for(o), Baseline::WhiteNoise, o.cfg.alpha);
  emit(o.output, spectra_tsv(oracle, b, o.cfg.alpha));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral change-point detection for piecewise stationary time series"};
  app.require_subcommand(1);
  Options o;

  auto* det = app.add_subcommand("detect", "segment a single-column CSV series");
  det->add_option("input", o.input, "input CSV")->required();
  det->add_option("-o,--output", o.output, "result JSON (default stdout)");
  det->add_option("--rows", o.rows, "keep data rows a:b (0-based, half-open)");
  det->add_option("--spectra", o.spectra, "write per-segment st(f_hat) TSV here");
  add_detector_flags(det, o);

  auto* sim = app.add_subcommand("simulate", "simulate a benchmark case or spec file");
  sim->add_option("--case", o.case_id, "case 1..4");
  sim->add_option("--spec", o.spec_file, "piecewise spec file");
  sim->add_option("--noise", o.noise, "gaussian | t4 (for --case)")->capture_default_str();
  sim->add_option("--seed", o.seed, "seed")->capture_default_str();
  sim->add_option("-o,--output", o.output, "output CSV; truth goes to <output>.truth.json")->required();

  auto* bench = app.add_subcommand("bench", "Monte-Carlo replications");
  bench->add_option("--case", o.case_id, "case 1..4");
  bench->add_option("--spec", o.spec_file, "piecewise spec file");
  bench->add_option("--noise", o.noise, "gaussian | t4 (for --case)")->capture_default_str();
  bench->add_option("--seed", o.seed, "first replicate seed")->capture_default_str();
  bench->add_option("--reps", o.reps, "replications")->capture_default_str();
  bench->add_option("--jobs", o.jobs, "worker threads (default: logical cores)");
  bench->add_option("--sweep-c", o.sweep_c, "penalty sweep lo:hi:step");
  bench->add_option("-o,--output", o.output, "write machine-readable rows here");
  add_detector_flags(bench, o);

  auto* spec = app.add_subcommand("spectrum", "export per-segment normalized spectra");
  spec->add_option("input", o.input, "input CSV")->required();
  spec->add_option("--boundaries", o.boundaries, "interior change points, comma separated");
  spec->add_option("--rows", o.rows, "keep data rows a:b (0-based, half-open)");
  spec->add_option("--alpha", o.cfg.alpha, "bandwidth exponent")->capture_default_str();
  spec->add_option("--grid", o.cfg.grid_size, "frequency grid size")->capture_default_str();
  spec->add_option("--band", o.band, "restrict frequencies to lo:hi (radians)");
  spec->add_option("-o,--output", o.output, "output TSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*det) return cmd_detect(o);
    if (*sim) return cmd_simulate(o);
    if (*bench) return cmd_bench(o);
    if (*spec) return cmd_spectrum(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
