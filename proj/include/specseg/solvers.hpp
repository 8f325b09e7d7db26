#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "specseg/divergence.hpp"

namespace specseg {

// Sorted admissible change-point locations.
struct CandidateSet {
  std::vector<int> indices;

  bool empty() const noexcept { return indices.empty(); }
  std::size_t size() const noexcept { return indices.size(); }
};

// {i * n_su : ml <= i * n_su <= n - ml}
inline CandidateSet grid_candidates(int n, int ml, int n_su) {
  if (n_su < 1) throw Error(ErrorCode::InvalidConfig, "n_su must be >= 1");
  CandidateSet c;
  const int first = ((ml + n_su - 1) / n_su) * n_su;
  for (int p = first; p <= n - ml; p += n_su) c.indices.push_back(p);
  return c;
}

struct PenaltySchedule {
  double me_bic = 0.0;  // median window divergence
  double c = 0.73;      // exponent
  double c_n = 0.0;     // me_bic * n^c, penalty per change point
};

template <class O>
concept ScoreSource = requires(const O& o, int a, int b) {
  { o.score(a, b) } -> std::convertible_to<double>;
};

// Memoized segment scores for one series, grid, baseline and bandwidth
// exponent. The baseline is computed once from the full series (pooled) or
// set to white noise, and stays fixed for every query. Concurrent score()
// calls are safe; a memo entry, once inserted, never changes.
class ScoreOracle {
 public:
  ScoreOracle(const Series& series, const FrequencyGrid& grid, Baseline baseline, double alpha)
      : series_(series.centered ? series : center_series(series.values)),
        table_(build_dft_table(series_, grid)),
        baseline_(baseline == Baseline::Pooled ? pooled_baseline(table_, alpha)
                                               : white_noise_baseline(grid)),
        scorer_(series_, table_, baseline_, alpha),
        alpha_(alpha) {}

  ScoreOracle(const ScoreOracle&) = delete;
  ScoreOracle& operator=(const ScoreOracle&) = delete;

  double score(int a, int b) const {
    const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
    {
      std::shared_lock lock(mu_);
      if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    const double value = scorer_.score(a, b);
    std::unique_lock lock(mu_);
    return memo_.try_emplace(key, value).first->second;
  }

  int n() const noexcept { return series_.n(); }
  double alpha() const noexcept { return alpha_; }
  const Series& series() const noexcept { return series_; }
  const DftTable& table() const noexcept { return table_; }
  const SpectralEstimate& baseline() const noexcept { return baseline_; }

  std::size_t memo_size() const {
    std::shared_lock lock(mu_);
    return memo_.size();
  }

 private:
  Series series_;
  DftTable table_;
  SpectralEstimate baseline_;
  SegmentScorer scorer_;
  double alpha_;
  mutable std::shared_mutex mu_;
  mutable std::unordered_map<std::uint64_t, double> memo_;
};

namespace detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// 0, the candidates inside [ml, n - ml], then n.
inline std::vector<int> dp_positions(const CandidateSet& cands, int n, int ml) {
  std::vector<int> pos{0};
  for (int c : cands.indices) {
    if (c >= ml && c <= n - ml && c > pos.back()) pos.push_back(c);
  }
  pos.push_back(n);
  return pos;
}

template <ScoreSource O>
double left_to_right_objective(const O& oracle, const std::vector<int>& boundaries) {
  double total = 0.0;
  for (std::size_t k = 1; k < boundaries.size(); ++k) {
    total += oracle.score(boundaries[k - 1], boundaries[k]);
  }
  return total;
}

inline double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::DegenerateData, "median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

}  // namespace detail

// Exact DP for every change-point count L = 0..k_max at once. Entry L holds
// the maximizing segmentation with exactly L change points drawn from cands
// (gaps >= ml), or nullopt when none exists. Among maximizers the
// lexicographically smallest boundary vector wins.
//
// Runs the recursion from the right: best[j][i] is the best score of the
// suffix (pos[i], n] split by j further change points. Each segment score is
// requested exactly once.
template <ScoreSource O>
std::vector<std::optional<Segmentation>> dp_solve_layers(const O& oracle, int k_max,
                                                         const CandidateSet& cands, int n, int ml) {
  if (k_max < 0) throw Error(ErrorCode::InvalidConfig, "k_max must be >= 0");
  if (ml < 1 || n < ml) throw Error(ErrorCode::Infeasible, "series shorter than ml");
  const auto pos = detail::dp_positions(cands, n, ml);
  const int count = static_cast<int>(pos.size());
  const int last = count - 1;
  std::vector<std::vector<double>> best(k_max + 1, std::vector<double>(count, detail::kNegInf));
  std::vector<std::vector<int>> choice(k_max + 1, std::vector<int>(count, -1));

  for (int i = last - 1; i >= 0; --i) {
    if (n - pos[i] < ml) continue;
    best[0][i] = oracle.score(pos[i], n);
    choice[0][i] = last;
    // An interior start already uses one change point.
    const int room = (n - pos[i]) / ml - 1;
    const int top = std::min(i == 0 ? k_max : k_max - 1, room);
    if (top < 1) continue;
    for (int k = i + 1; k < last; ++k) {
      if (pos[k] - pos[i] < ml) continue;
      if (best[0][k] == detail::kNegInf) break;  // later positions leave even less room
      const double s = oracle.score(pos[i], pos[k]);
      for (int j = 1; j <= top; ++j) {
        if (best[j - 1][k] == detail::kNegInf) break;
        const double v = s + best[j - 1][k];
        if (v > best[j][i]) {
          best[j][i] = v;
          choice[j][i] = k;
        }
      }
    }
  }

  std::vector<std::optional<Segmentation>> out(k_max + 1);
  for (int layer = 0; layer <= k_max; ++layer) {
    if (best[layer][0] == detail::kNegInf) continue;
    Segmentation seg;
    seg.boundaries.push_back(0);
    int i = 0;
    for (int j = layer; j >= 0; --j) {
      i = choice[j][i];
      seg.boundaries.push_back(pos[i]);
    }
    seg.objective = detail::left_to_right_objective(oracle, seg.boundaries);
    out[layer] = std::move(seg);
  }
  return out;
}

template <ScoreSource O>
Segmentation dp_solve(const O& oracle, int k, const CandidateSet& cands, int n, int ml) {
  if (k < 0) throw Error(ErrorCode::InvalidConfig, "k must be >= 0");
  if (static_cast<long long>(k + 1) * ml > n) {
    throw Error(ErrorCode::Infeasible, std::to_string(k) + " change points need " +
                                           std::to_string(static_cast<long long>(k + 1) * ml) +
                                           " samples, have " + std::to_string(n));
  }
  auto layers = dp_solve_layers(oracle, k, cands, n, ml);
  if (!layers[k]) {
    throw Error(ErrorCode::Infeasible,
                "no admissible segmentation with " + std::to_string(k) + " change points");
  }
  return std::move(*layers[k]);
}

// Smallest sub-window a screening split may leave on either side.
inline int screen_min_subsegment(int window, double alpha) {
  return std::max(2 * bandwidth_for(window, alpha), 32);
}

// Slides a window of length l in steps of n_su and records, per window, the
// split point maximizing score(j, p) + score(p, j + l). Splits lie on the
// n_su grid and leave at least screen_min_subsegment(l) samples on each side.
// The union of split points inside [ml, n - ml] is returned.
template <ScoreSource O>
CandidateSet screen(const O& oracle, int l, int n_su, int n, int ml, double alpha) {
  if (n_su < 1) throw Error(ErrorCode::InvalidConfig, "n_su must be >= 1");
  const int min_sub = screen_min_subsegment(l, alpha);
  if (l < 2 * min_sub) {
    throw Error(ErrorCode::WindowTooSmall, "screen window " + std::to_string(l) + " < " +
                                               std::to_string(2 * min_sub));
  }
  if (l > n) throw Error(ErrorCode::WindowTooSmall, "screen window longer than the series");
  CandidateSet out;
  for (int j = 0; j + l <= n; j += n_su) {
    const int end = j + l;
    int p = ((j + min_sub + n_su - 1) / n_su) * n_su;
    double best = detail::kNegInf;
    int arg = -1;
    for (; p <= end - min_sub; p += n_su) {
      const double v = oracle.score(j, p) + oracle.score(p, end);
      if (v > best) {
        best = v;
        arg = p;
      }
    }
    if (arg >= ml && arg <= n - ml) out.indices.push_back(arg);
  }
  std::sort(out.indices.begin(), out.indices.end());
  out.indices.erase(std::unique(out.indices.begin(), out.indices.end()), out.indices.end());
  return out;
}

// me_BIC = median over windows (j, j + ml], j = 0, ml/2, ml, ..., of the
// window divergence score / ml; C_N = me_BIC * n^c.
template <ScoreSource O>
PenaltySchedule calibrate_penalty(const O& oracle, int ml, double c, int n) {
  if (ml < 1 || n < 2 * ml) throw Error(ErrorCode::Infeasible, "calibration needs n >= 2 * ml");
  const int stride = std::max(1, ml / 2);
  std::vector<double> window;
  for (int a = 0; a + ml <= n; a += stride) window.push_back(oracle.score(a, a + ml) / ml);
  PenaltySchedule pen;
  pen.me_bic = detail::median(std::move(window));
  if (!(pen.me_bic > 0.0)) {
    throw Error(ErrorCode::DegenerateData, "median window divergence is not positive");
  }
  pen.c = c;
  pen.c_n = pen.me_bic * std::pow(static_cast<double>(n), c);
  return pen;
}

// argmin_L -R_L + L * c_n over feasible layers (NaN marks infeasible); ties
// go to the smaller L.
inline int select_k(const std::vector<double>& layer_objectives, double c_n) {
  int arg = -1;
  double best = std::numeric_limits<double>::infinity();
  for (int L = 0; L < static_cast<int>(layer_objectives.size()); ++L) {
    const double r = layer_objectives[L];
    if (std::isnan(r)) continue;
    const double bic = L == 0 ? -r : -r + L * c_n;
    if (arg < 0 || bic < best) {
      best = bic;
      arg = L;
    }
  }
  if (arg < 0) throw Error(ErrorCode::Infeasible, "no feasible change-point count");
  return arg;
}

struct BicSelection {
  int k_hat = 0;
  Segmentation segmentation;
  std::vector<double> layer_objectives;  // max R for L = 0..k_max, NaN if infeasible
  std::vector<std::optional<Segmentation>> layers;
};

template <ScoreSource O>
BicSelection bic_select(const O& oracle, const CandidateSet& cands, int k_max,
                        const PenaltySchedule& pen, int n, int ml) {
  BicSelection sel;
  sel.layers = dp_solve_layers(oracle, k_max, cands, n, ml);
  sel.layer_objectives.assign(k_max + 1, std::numeric_limits<double>::quiet_NaN());
  for (int L = 0; L <= k_max; ++L) {
    if (sel.layers[L]) sel.layer_objectives[L] = sel.layers[L]->objective;
  }
  sel.k_hat = select_k(sel.layer_objectives, pen.c_n);
  sel.segmentation = *sel.layers[sel.k_hat];
  return sel;
}

struct PeltResult {
  int k_hat = 0;
  Segmentation segmentation;
  bool pruning = false;
  std::size_t pruned = 0;  // candidates dropped by the pruning rule
};

// Minimizes sum(-score) + c_n * (#change points) over segmentations with
// change points from cands. With pruning, a start s is discarded at t once
// F(s) - score(s, t) >= F(t); the K-L cost is not known to satisfy the
// condition that makes this rule exact, so pruned runs are heuristic.
template <ScoreSource O>
PeltResult pelt_solve(const O& oracle, const CandidateSet& cands, const PenaltySchedule& pen, int n,
                      int ml, bool prune) {
  if (ml < 1 || n < ml) throw Error(ErrorCode::Infeasible, "series shorter than ml");
  PeltResult res;
  res.pruning = prune;
  if (std::isinf(pen.c_n) && pen.c_n > 0) {
    res.segmentation.boundaries = {0, n};
    res.segmentation.objective = oracle.score(0, n);
    return res;
  }
  const auto pos = detail::dp_positions(cands, n, ml);
  const int count = static_cast<int>(pos.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> f(count, inf);
  std::vector<int> prev(count, -1);
  f[0] = -pen.c_n;
  std::vector<int> active{0};
  std::vector<double> cost;
  for (int t = 1; t < count; ++t) {
    cost.assign(active.size(), inf);
    for (std::size_t r = 0; r < active.size(); ++r) {
      const int s = active[r];
      if (pos[t] - pos[s] < ml) continue;
      cost[r] = f[s] - oracle.score(pos[s], pos[t]);
      const double v = cost[r] + pen.c_n;
      if (v < f[t]) {
        f[t] = v;
        prev[t] = s;
      }
    }
    if (prune && f[t] < inf) {
      std::size_t keep = 0;
      for (std::size_t r = 0; r < active.size(); ++r) {
        if (cost[r] < inf && cost[r] >= f[t]) {
          ++res.pruned;
          continue;
        }
        active[keep++] = active[r];
      }
      active.resize(keep);
    }
    if (t < count - 1 && f[t] < inf) active.push_back(t);
  }
  if (prev[count - 1] < 0) throw Error(ErrorCode::Infeasible, "no admissible segmentation");
  std::vector<int> rev;
  for (int t = count - 1; t >= 0; t = prev[t]) {
    rev.push_back(pos[t]);
    if (t == 0) break;
  }
  res.segmentation.boundaries.assign(rev.rbegin(), rev.rend());
  res.segmentation.objective = detail::left_to_right_objective(oracle, res.segmentation.boundaries);
  res.k_hat = res.segmentation.k();
  return res;
}

}  // namespace specseg
