#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "specseg/spectral.hpp"
#include "specseg/vecmath.hpp"

namespace specseg {

// st(f) = f / F with F the quadrature mass of f.
inline std::vector<double> normalize(const SpectralEstimate& f) {
  if (!(f.mass >= detail::kZeroMass)) throw Error(ErrorCode::ZeroMass, "cannot normalize zero mass");
  std::vector<double> out(f.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f.values[i] / f.mass;
  return out;
}

namespace detail {

inline constexpr double kLogFloorRatio = 1e-12;

// log st(f) with values clamped below at 1e-12 * max(f).
inline std::vector<double> floored_log_density(const SpectralEstimate& f) {
  if (!(f.mass >= kZeroMass)) throw Error(ErrorCode::ZeroMass, "reference spectrum has zero mass");
  double peak = 0.0;
  for (double v : f.values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::SupportMismatch, "reference spectrum must be finite and non-negative");
    }
    peak = std::max(peak, v);
  }
  const double floor = kLogFloorRatio * peak;
  const double log_mass = std::log(f.mass);
  std::vector<double> out(f.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(std::max(f.values[i], floor)) - log_mass;
  return out;
}

// sum_i w f_i (log f_i - log F - ref_log_density_i), with 0 log 0 = 0.
inline double divergence_from_logs(std::span<const double> f, double mass, double weight,
                                   std::span<const double> ref_log_density) {
  const double log_mass = std::log(mass);
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] > 0.0) acc += f[i] * (std::log(f[i]) - log_mass - ref_log_density[i]);
  }
  return weight * acc;
}

}  // namespace detail

// Generalized K-L divergence D(f1 || f2) = integral of f1 log(st(f1) / st(f2)).
// f1 enters unnormalized, so D scales with the mass of f1.
inline double kl_divergence(const SpectralEstimate& f1, const SpectralEstimate& f2) {
  if (!(f1.grid == f2.grid) || f1.values.size() != f2.values.size()) {
    throw Error(ErrorCode::GridMismatch, "spectra live on different grids");
  }
  if (!(f1.mass >= detail::kZeroMass)) throw Error(ErrorCode::ZeroMass, "f1 has zero mass");
  const auto ref = detail::floored_log_density(f2);
  return detail::divergence_from_logs(f1.values, f1.mass, f1.grid.weight, ref);
}

struct SegmentScore {
  int a = 0;
  int b = 0;
  double score = 0.0;  // (b - a) * D(f_hat_(a,b] || baseline)
};

inline SegmentScore segment_score(const DftTable& t, int a, int b, const SpectralEstimate& baseline,
                                  double alpha) {
  const auto f = segment_spectrum(t, a, b, alpha);
  return {a, b, (b - a) * kl_divergence(f, baseline)};
}

// R(tau) = sum of segment scores, summed left to right.
inline double objective(const DftTable& t, const Segmentation& s, const SpectralEstimate& baseline,
                        double alpha) {
  double total = 0.0;
  for (std::size_t k = 1; k < s.boundaries.size(); ++k) {
    total += segment_score(t, s.boundaries[k - 1], s.boundaries[k], baseline, alpha).score;
  }
  return total;
}

// Fused spectrum + divergence evaluation against a fixed baseline. Computes
// the same quantity as segment_score without materializing SpectralEstimate
// objects. On full grids the aliased autocovariances come from lagged-product
// prefix sums and only the symmetric half grid is evaluated; other grids go
// through segment_spectrum.
class SegmentScorer {
 public:
  SegmentScorer(const Series& series, const DftTable& table, const SpectralEstimate& baseline,
                double alpha)
      : table_(&table), alpha_(alpha), ref_log_(detail::floored_log_density(baseline)) {
    if (!(table.grid() == baseline.grid)) {
      throw Error(ErrorCode::GridMismatch, "baseline grid differs from the table grid");
    }
    if (series.n() != table.n()) throw Error(ErrorCode::BadRange, "series/table length mismatch");
    const auto& g = table.grid();
    const int full = g.full_size;
    const int max_m = bandwidth_for(std::max(2, table.n()), alpha);
    if (!g.is_full() || max_m >= full / 2) return;
    const int h = full / 2;
    for (int i = 1; i < h; ++i) {
      if (ref_log_[i] != ref_log_[full - i]) return;  // half-grid sums need a symmetric baseline
    }
    multiplicity_.assign(h + 1, 2.0);
    multiplicity_[0] = 1.0;
    multiplicity_[h] = 1.0;
    half_ref_log_.assign(ref_log_.begin(), ref_log_.begin() + h + 1);
    lags_.emplace(series, full, max_m);
  }

  const DftTable& table() const noexcept { return *table_; }
  double alpha() const noexcept { return alpha_; }

  // Score of the segment (a, b]. Safe to call concurrently.
  double score(int a, int b) const {
    if (!(0 <= a && a < b && b <= table_->n())) {
      throw Error(ErrorCode::BadRange, "segment (" + std::to_string(a) + ", " +
                                           std::to_string(b) + "] out of range");
    }
    const auto& g = table_->grid();
    if (!lags_) {
      const auto f = segment_spectrum(*table_, a, b, alpha_);
      return (b - a) * detail::divergence_from_logs(f.values, f.mass, g.weight, ref_log_);
    }
    const int m = bandwidth_for(b - a, alpha_);
    const int h = g.full_size / 2;
    thread_local std::vector<double> autocov;
    thread_local std::vector<double> half;
    thread_local std::vector<double> logs;
    autocov.resize(m);
    half.resize(h + 1);
    logs.resize(h + 1);
    lags_->aliased_autocov(a, b, m, autocov);
    detail::evaluate_cosine_series(autocov, m, g.full_size, half);
    for (int i = 0; i <= h; ++i) logs[i] = half[i] > 0.0 ? half[i] : 1.0;
    detail::log_inplace(logs);
    // Four interleaved partial sums keep the reduction vectorizable while the
    // summation order stays fixed.
    double sf[4] = {0.0, 0.0, 0.0, 0.0};
    double sl[4] = {0.0, 0.0, 0.0, 0.0};
    int i = 0;
    for (; i + 4 <= h + 1; i += 4) {
      for (int k = 0; k < 4; ++k) {
        const double wf = multiplicity_[i + k] * half[i + k];
        sf[k] += wf;
        sl[k] += wf * (logs[i + k] - half_ref_log_[i + k]);
      }
    }
    for (; i <= h; ++i) {
      const double wf = multiplicity_[i] * half[i];
      sf[0] += wf;
      sl[0] += wf * (logs[i] - half_ref_log_[i]);
    }
    const double sum_f = (sf[0] + sf[1]) + (sf[2] + sf[3]);
    const double sum_flog = (sl[0] + sl[1]) + (sl[2] + sl[3]);
    const double mass = g.weight * sum_f;
    if (!(mass >= detail::kZeroMass)) {
      throw Error(ErrorCode::ZeroSegment, "segment (" + std::to_string(a) + ", " +
                                              std::to_string(b) + "] has zero spectral mass");
    }
    return (b - a) * (g.weight * sum_flog - mass * std::log(mass));
  }

 private:
  const DftTable* table_;
  double alpha_;
  std::vector<double> ref_log_;
  std::vector<double> half_ref_log_;
  std::vector<double> multiplicity_;
  std::optional<LagProductTable> lags_;
};

}  // namespace specseg
