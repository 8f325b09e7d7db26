#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specseg/error.hpp"

namespace specseg {

// Observation vector X_1..X_N. Detection assumes zero mean, so the pipeline
// works on centered series only.
struct Series {
  std::vector<double> values;
  bool centered = false;

  int n() const noexcept { return static_cast<int>(values.size()); }
};

inline Series center_series(std::span<const double> raw) {
  if (raw.size() < 2) {
    throw Error(ErrorCode::EmptyInput, "series needs at least 2 observations, got " +
                                           std::to_string(raw.size()));
  }
  double sum = 0.0;
  for (double x : raw) sum += x;
  const double mean = sum / static_cast<double>(raw.size());
  Series s;
  s.values.reserve(raw.size());
  for (double x : raw) s.values.push_back(x - mean);
  s.centered = true;
  return s;
}

// Evaluation frequencies. Every grid is a subset of the equispaced grid
// lambda_k = -pi + k * 2pi / full_size, k = 0..full_size-1, half-open [-pi, pi).
// index[i] is the position of points[i] on that full grid.
struct FrequencyGrid {
  std::vector<double> points;
  std::vector<int> index;
  double weight = 0.0;
  int full_size = 0;

  int size() const noexcept { return static_cast<int>(points.size()); }
  bool is_full() const noexcept { return size() == full_size; }

  friend bool operator==(const FrequencyGrid& a, const FrequencyGrid& b) {
    return a.full_size == b.full_size && a.index == b.index;
  }
};

inline constexpr int kMinGridSize = 16;

inline FrequencyGrid make_grid(int grid_size) {
  if (grid_size < kMinGridSize || grid_size % 2 != 0) {
    throw Error(ErrorCode::InvalidGridSize,
                "grid size must be even and >= 16, got " + std::to_string(grid_size));
  }
  FrequencyGrid g;
  g.full_size = grid_size;
  g.weight = 2.0 * std::numbers::pi / grid_size;
  g.points.resize(grid_size);
  g.index.resize(grid_size);
  for (int i = 0; i < grid_size; ++i) {
    g.points[i] = -std::numbers::pi + i * g.weight;
    g.index[i] = i;
  }
  return g;
}

// Keeps the grid points inside [lo, hi]. The quadrature weight is unchanged,
// so integrals over the restricted grid only cover the band.
inline FrequencyGrid restrict_band(const FrequencyGrid& grid, double lo, double hi) {
  if (!(lo >= -std::numbers::pi && lo < hi && hi <= std::numbers::pi)) {
    throw Error(ErrorCode::InvalidConfig, "band must satisfy -pi <= lo < hi <= pi");
  }
  FrequencyGrid out;
  out.full_size = grid.full_size;
  out.weight = grid.weight;
  for (int i = 0; i < grid.size(); ++i) {
    if (grid.points[i] >= lo && grid.points[i] <= hi) {
      out.points.push_back(grid.points[i]);
      out.index.push_back(grid.index[i]);
    }
  }
  if (out.size() < kMinGridSize) {
    throw Error(ErrorCode::InvalidGridSize, "band keeps only " + std::to_string(out.size()) +
                                                " grid points, need at least 16");
  }
  return out;
}

// 0 = tau_0 < tau_1 < ... < tau_{K+1} = N.
struct Segmentation {
  std::vector<int> boundaries;
  double objective = 0.0;

  int k() const noexcept { return static_cast<int>(boundaries.size()) - 2; }

  std::vector<int> change_points() const {
    if (boundaries.size() <= 2) return {};
    return {boundaries.begin() + 1, boundaries.end() - 1};
  }
};

struct SegmentationViolation {
  enum class Kind { TooFewBoundaries, BadStart, BadEnd, NotIncreasing, SegmentTooShort };
  Kind kind;
  int index;  // position in the boundary vector where the constraint fails
  std::string message;
};

inline std::optional<SegmentationViolation> validate_segmentation(const Segmentation& s, int n,
                                                                  int ml) {
  using Kind = SegmentationViolation::Kind;
  const auto& b = s.boundaries;
  if (b.size() < 2) return SegmentationViolation{Kind::TooFewBoundaries, 0, "need at least [0, n]"};
  if (b.front() != 0) return SegmentationViolation{Kind::BadStart, 0, "first boundary must be 0"};
  const int last = static_cast<int>(b.size()) - 1;
  if (b.back() != n) {
    return SegmentationViolation{Kind::BadEnd, last, "last boundary must be " + std::to_string(n)};
  }
  for (int i = 1; i <= last; ++i) {
    const int gap = b[i] - b[i - 1];
    if (gap <= 0) {
      return SegmentationViolation{Kind::NotIncreasing, i, "boundaries must strictly increase"};
    }
    if (gap < ml) {
      return SegmentationViolation{Kind::SegmentTooShort, i,
                                   "gap " + std::to_string(gap) + " < ml " + std::to_string(ml)};
    }
  }
  return std::nullopt;
}

// Kernel bandwidth for a segment of seg_len samples: m = max(2, round(seg_len^alpha)).
inline int bandwidth_for(int seg_len, double alpha) {
  const double m = std::round(std::pow(static_cast<double>(seg_len), alpha));
  return std::max(2, static_cast<int>(m));
}

enum class Baseline { Pooled, WhiteNoise };

enum class Solver {
  DpKnownK,       // exact DP for a given K over the full candidate grid
  Screening,      // screened candidates, then DP (BIC over L unless K is given)
  Pelt,           // penalized search over the full candidate grid
  BicExhaustive,  // BIC over L = 0..k_max with DP on the full candidate grid
};

struct DetectorConfig {
  int ml = 350;
  int k_max = 6;
  double alpha = 1.0 / 3.0;
  Baseline baseline = Baseline::Pooled;
  int grid_size = 512;
  int n_su = 1;
  double penalty_exponent = 0.73;
  Solver solver = Solver::Screening;
  int screen_window = 0;  // 0 selects 2 * ml
  bool pelt_pruning = true;

  int effective_screen_window() const noexcept {
    return screen_window > 0 ? screen_window : 2 * ml;
  }
};

// Checks the configuration against a series of length n. Throws
// InvalidConfig for out-of-range parameters and Infeasible when the
// series cannot host two segments. A k_max beyond n / ml - 1 is accepted;
// the unreachable change-point counts are skipped by the solvers.
inline void validate_config(const DetectorConfig& c, int n) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (c.ml < 2) fail("ml must be >= 2");
  if (!(c.alpha >= 0.25 && c.alpha < 0.5)) fail("alpha must lie in [1/4, 1/2)");
  if (bandwidth_for(c.ml, c.alpha) >= c.ml) {
    fail("ml must exceed the kernel bandwidth at length ml");
  }
  if (c.k_max < 0) fail("k_max must be >= 0");
  if (c.grid_size < kMinGridSize || c.grid_size % 2 != 0) fail("grid must be even and >= 16");
  if (c.n_su < 1) fail("n_su must be >= 1");
  if (!(c.penalty_exponent >= 0.0) || !std::isfinite(c.penalty_exponent)) {
    fail("penalty exponent c must be finite and >= 0");
  }
  if (c.screen_window != 0 && c.screen_window < c.ml) fail("screen window must be >= ml");
  if (n < 2 * c.ml) {
    throw Error(ErrorCode::Infeasible, "series length " + std::to_string(n) + " < 2 * ml (" +
                                           std::to_string(2 * c.ml) + ")");
  }
}

}  // namespace specseg
