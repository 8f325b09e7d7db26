#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "specseg/core.hpp"

namespace specseg {

namespace detail {

// exp(i * k * 2pi / full) for k = 0..full-1, with root[full - k] == conj(root[k])
// bit-for-bit so that spectra of real series are exactly symmetric.
inline std::vector<std::complex<double>> unit_roots(int full) {
  std::vector<std::complex<double>> root(full);
  const double step = 2.0 * std::numbers::pi / full;
  for (int k = 0; k <= full / 2; ++k) {
    root[k] = {std::cos(k * step), std::sin(k * step)};
  }
  for (int k = full / 2 + 1; k < full; ++k) root[k] = std::conj(root[full - k]);
  return root;
}

inline int wrap_index(long long k, int full) {
  long long r = k % full;
  if (r < 0) r += full;
  return static_cast<int>(r);
}

}  // namespace detail

// Prefix sums of the series' Fourier terms on the grid:
// cumsum[t][i] = sum_{j=1..t} X_j exp(-i j lambda_i), so the DFT of any
// segment (a, b] is the difference of two rows.
class DftTable {
 public:
  DftTable(FrequencyGrid grid, int n) : grid_(std::move(grid)), n_(n) {
    cumsum_.assign(static_cast<std::size_t>(n + 1) * grid_.size(), {0.0, 0.0});
  }

  const FrequencyGrid& grid() const noexcept { return grid_; }
  int n() const noexcept { return n_; }
  int columns() const noexcept { return grid_.size(); }

  std::span<const std::complex<double>> row(int t) const {
    return {cumsum_.data() + static_cast<std::size_t>(t) * columns(),
            static_cast<std::size_t>(columns())};
  }
  std::span<std::complex<double>> row(int t) {
    return {cumsum_.data() + static_cast<std::size_t>(t) * columns(),
            static_cast<std::size_t>(columns())};
  }

 private:
  FrequencyGrid grid_;
  int n_;
  std::vector<std::complex<double>> cumsum_;
};

inline DftTable build_dft_table(const Series& s, const FrequencyGrid& g) {
  const int n = s.n();
  const int full = g.full_size;
  const auto root = detail::unit_roots(full);
  DftTable table(g, n);
  // lambda_i = (index_i - full/2) * step, so exp(-i j lambda_i) is the root
  // with exponent j * (full/2 - index_i) mod full.
  std::vector<int> stride(g.size());
  std::vector<int> phase(g.size(), 0);
  for (int i = 0; i < g.size(); ++i) stride[i] = detail::wrap_index(full / 2 - g.index[i], full);
  for (int t = 1; t <= n; ++t) {
    const double x = s.values[t - 1];
    auto prev = std::as_const(table).row(t - 1);
    auto cur = table.row(t);
    for (int i = 0; i < g.size(); ++i) {
      phase[i] += stride[i];
      if (phase[i] >= full) phase[i] -= full;
      cur[i] = prev[i] + x * root[phase[i]];
    }
  }
  return table;
}

// I(lambda) = |sum_{j=a+1..b} X_j exp(-i j lambda)|^2 / (b - a). No 1/(2pi) factor.
inline std::vector<double> periodogram(const DftTable& t, int a, int b) {
  if (!(0 <= a && a < b && b <= t.n())) {
    throw Error(ErrorCode::BadRange, "segment (" + std::to_string(a) + ", " + std::to_string(b) +
                                         "] outside [0, " + std::to_string(t.n()) + "]");
  }
  const auto hi = t.row(b);
  const auto lo = t.row(a);
  const double inv_len = 1.0 / (b - a);
  std::vector<double> out(t.columns());
  for (int i = 0; i < t.columns(); ++i) out[i] = std::norm(hi[i] - lo[i]) * inv_len;
  return out;
}

// Fejer kernel sin^2(m u / 2) / (2 pi m sin^2(u / 2)), 2pi-periodic.
inline double fejer_kernel_value(double u, int m) {
  const double w = std::remainder(u, 2.0 * std::numbers::pi);
  if (std::abs(w) < 1e-8) return m / (2.0 * std::numbers::pi);
  const double num = std::sin(m * w / 2.0);
  const double den = std::sin(w / 2.0);
  return (num * num) / (2.0 * std::numbers::pi * m * den * den);
}

namespace detail {

// Shared read-mostly tables keyed by grid size (and bandwidth). Entries are
// never evicted, so returned references stay valid for the process lifetime.
class TableCache {
 public:
  static TableCache& instance() {
    static TableCache cache;
    return cache;
  }

  // Kernel values at every full-grid offset: row[d] = K(d * 2pi / full).
  const std::vector<double>& kernel_row(int m, int full) {
    std::lock_guard lock(mu_);
    auto& slot = kernels_[{m, full}];
    if (!slot) {
      auto row = std::make_unique<std::vector<double>>(full);
      const double step = 2.0 * std::numbers::pi / full;
      for (int d = 0; d < full; ++d) (*row)[d] = fejer_kernel_value(d * step, m);
      slot = std::move(row);
    }
    return *slot;
  }

  // cos(v * lambda_i) for v = 0..full/2 and i = 0..full/2 (half grid), row-major by v.
  const std::vector<double>& half_cosines(int full) {
    std::lock_guard lock(mu_);
    auto& slot = cosines_[full];
    if (!slot) {
      const auto root = unit_roots(full);
      const int h = full / 2;
      auto table = std::make_unique<std::vector<double>>(static_cast<std::size_t>(h + 1) * (h + 1));
      for (int v = 0; v <= h; ++v) {
        for (int i = 0; i <= h; ++i) {
          (*table)[static_cast<std::size_t>(v) * (h + 1) + i] =
              root[wrap_index(static_cast<long long>(v) * (i - h), full)].real();
        }
      }
      slot = std::move(table);
    }
    return *slot;
  }

 private:
  std::mutex mu_;
  std::map<std::pair<int, int>, std::unique_ptr<std::vector<double>>> kernels_;
  std::map<int, std::unique_ptr<std::vector<double>>> cosines_;
};

}  // namespace detail

struct SpectralEstimate {
  FrequencyGrid grid;
  std::vector<double> values;  // power per radian, >= 0
  double mass = 0.0;           // weight * sum(values)
  int seg_len = 0;
  int bandwidth_m = 0;
};

inline double quadrature_sum(std::span<const double> values, double weight) {
  double s = 0.0;
  for (double v : values) s += v;
  return weight * s;
}

// Periodic Riemann-sum convolution of the periodogram with the Fejer kernel
// over the grid points.
inline SpectralEstimate smooth(std::span<const double> i_vals, int m, const FrequencyGrid& g) {
  if (static_cast<int>(i_vals.size()) != g.size()) {
    throw Error(ErrorCode::GridMismatch, "periodogram length does not match the grid");
  }
  if (m < 1) throw Error(ErrorCode::InvalidConfig, "bandwidth must be >= 1");
  const auto& kernel = detail::TableCache::instance().kernel_row(m, g.full_size);
  SpectralEstimate est;
  est.grid = g;
  est.bandwidth_m = m;
  est.values.assign(g.size(), 0.0);
  const int s = g.size();
  bool contiguous = true;
  for (int j = 1; j < s && contiguous; ++j) contiguous = g.index[j] == g.index[0] + j;
  if (contiguous) {
    // K is even, so K(i - j) = lag[j - i + s - 1] reads forward in j.
    thread_local std::vector<double> lag;
    lag.resize(2 * s - 1);
    for (int t = -(s - 1); t < s; ++t) lag[t + s - 1] = kernel[detail::wrap_index(t, g.full_size)];
    for (int i = 0; i < s; ++i) {
      const double* k = lag.data() + (s - 1 - i);
      double acc[4] = {0.0, 0.0, 0.0, 0.0};
      int j = 0;
      for (; j + 4 <= s; j += 4) {
        for (int q = 0; q < 4; ++q) acc[q] += k[j + q] * i_vals[j + q];
      }
      for (; j < s; ++j) acc[0] += k[j] * i_vals[j];
      est.values[i] = g.weight * ((acc[0] + acc[1]) + (acc[2] + acc[3]));
    }
    est.mass = quadrature_sum(est.values, g.weight);
    return est;
  }
  for (int i = 0; i < g.size(); ++i) {
    double acc = 0.0;
    for (int j = 0; j < g.size(); ++j) {
      acc += kernel[detail::wrap_index(g.index[i] - g.index[j], g.full_size)] * i_vals[j];
    }
    est.values[i] = g.weight * acc;
  }
  est.mass = quadrature_sum(est.values, g.weight);
  return est;
}

namespace detail {

inline constexpr double kZeroMass = 1e-300;

inline bool fast_path_applies(const FrequencyGrid& g, int m) {
  return g.is_full() && m < g.full_size / 2;
}

// The grid convolution of the Fejer kernel (a trigonometric polynomial of
// degree m - 1) with a periodogram equals a finite cosine series in the
// aliased autocovariances d_v = (1/full) sum_j I_j cos(v lambda_j):
//   f(lambda_i) = d_0 + 2 sum_{v=1}^{m-1} (1 - v/m) d_v cos(v lambda_i).
// Real series have symmetric periodograms, so only the half grid
// i = 0..full/2 is evaluated. Requires a full grid and m < full/2.
inline void evaluate_cosine_series(std::span<const double> d, int m, int full,
                                   std::span<double> half_out) {
  const int h = full / 2;
  const auto& cosines = TableCache::instance().half_cosines(full);
  const double d0 = d[0];
  for (int i = 0; i <= h; ++i) half_out[i] = d0;
  for (int v = 1; v < m; ++v) {
    const double* c = cosines.data() + static_cast<std::size_t>(v) * (h + 1);
    const double cv = 2.0 * (1.0 - static_cast<double>(v) / m) * d[v];
    double* out = half_out.data();
    for (int i = 0; i <= h; ++i) out[i] += cv * c[i];
  }
  for (int i = 0; i <= h; ++i) half_out[i] = std::max(0.0, half_out[i]);
}

// d_v from the DFT table rows of the segment (a, b].
inline void aliased_autocov_from_dft(const DftTable& t, int a, int b, int m, std::span<double> d,
                                     std::vector<double>& scratch) {
  const int full = t.grid().full_size;
  const int h = full / 2;
  const auto& cosines = TableCache::instance().half_cosines(full);
  const auto hi = t.row(b);
  const auto lo = t.row(a);
  const double edge = 1.0 / (static_cast<double>(b - a) * full);
  const double inner = 2.0 * edge;
  scratch.resize(h + 1);
  double* p = scratch.data();
  p[0] = std::norm(hi[0] - lo[0]) * edge;
  for (int i = 1; i < h; ++i) p[i] = std::norm(hi[i] - lo[i]) * inner;
  p[h] = std::norm(hi[h] - lo[h]) * edge;
  for (int v = 0; v < m; ++v) {
    const double* c = cosines.data() + static_cast<std::size_t>(v) * (h + 1);
    double acc = 0.0;
    for (int i = 0; i <= h; ++i) acc += p[i] * c[i];
    d[v] = acc;
  }
}

}  // namespace detail

// Prefix sums of lagged products Q_L(t) = sum_{s=1..t} X_s X_{s+L} for the
// lags L = |v + k * full| (0 <= v < max_m, any integer k) that fold onto the
// first max_m aliased autocovariances of a full grid. Gives d_v for any
// segment in O(max_m * n / full) instead of O(full * max_m).
class LagProductTable {
 public:
  LagProductTable(const Series& s, int full_size, int max_m) : n_(s.n()), full_(full_size), max_m_(max_m) {
    if (max_m < 1 || max_m >= full_size / 2) {
      throw Error(ErrorCode::InvalidConfig, "lag table needs 1 <= max_m < grid/2");
    }
    terms_.resize(max_m);
    auto add_lag = [&](int v, long long h, double mult) {
      const long long lag = h < 0 ? -h : h;
      if (lag >= n_) return;
      terms_[v].push_back({row_for(static_cast<int>(lag), s), mult});
    };
    for (int v = 0; v < max_m; ++v) {
      if (v == 0) {
        add_lag(0, 0, 1.0);
        for (long long k = 1; static_cast<long long>(k) * full_ < n_; ++k) add_lag(0, k * full_, 2.0);
      } else {
        for (long long k = 0; v + k * full_ < n_; ++k) add_lag(v, v + k * full_, 1.0);
        for (long long k = 1; k * full_ - v < n_; ++k) add_lag(v, v - k * full_, 1.0);
      }
      std::sort(terms_[v].begin(), terms_[v].end(),
                [&](const Term& x, const Term& y) { return lags_[x.row] < lags_[y.row]; });
    }
  }

  int n() const noexcept { return n_; }
  int max_m() const noexcept { return max_m_; }

  // d_v for v < m over the segment (a, b].
  void aliased_autocov(int a, int b, int m, std::span<double> d) const {
    const int len = b - a;
    const double inv_len = 1.0 / len;
    for (int v = 0; v < m; ++v) {
      double acc = 0.0;
      for (const Term& term : terms_[v]) {
        const int lag = lags_[term.row];
        if (lag >= len) break;
        const double* q = prefix_.data() + offsets_[term.row];
        acc += term.mult * (q[b - lag] - q[a]);
      }
      d[v] = acc * inv_len;
    }
  }

 private:
  struct Term {
    int row;
    double mult;
  };

  int row_for(int lag, const Series& s) {
    for (std::size_t r = 0; r < lags_.size(); ++r) {
      if (lags_[r] == lag) return static_cast<int>(r);
    }
    lags_.push_back(lag);
    offsets_.push_back(prefix_.size());
    const int len = n_ - lag;
    prefix_.push_back(0.0);
    double acc = 0.0;
    for (int t = 1; t <= len; ++t) {
      acc += s.values[t - 1] * s.values[t - 1 + lag];
      prefix_.push_back(acc);
    }
    return static_cast<int>(lags_.size()) - 1;
  }

  int n_;
  int full_;
  int max_m_;
  std::vector<int> lags_;
  std::vector<std::size_t> offsets_;
  std::vector<double> prefix_;
  std::vector<std::vector<Term>> terms_;
};

// Smoothed periodogram of the segment (a, b] with bandwidth round((b-a)^alpha).
inline SpectralEstimate segment_spectrum(const DftTable& t, int a, int b, double alpha) {
  if (!(0 <= a && a < b && b <= t.n())) {
    throw Error(ErrorCode::BadRange, "segment (" + std::to_string(a) + ", " + std::to_string(b) +
                                         "] outside [0, " + std::to_string(t.n()) + "]");
  }
  const int m = bandwidth_for(b - a, alpha);
  const auto& g = t.grid();
  SpectralEstimate est;
  if (detail::fast_path_applies(g, m)) {
    const int full = g.full_size;
    const int h = full / 2;
    std::vector<double> scratch;
    std::vector<double> d(m);
    est.grid = g;
    est.bandwidth_m = m;
    est.values.resize(full);
    detail::aliased_autocov_from_dft(t, a, b, m, d, scratch);
    detail::evaluate_cosine_series(d, m, full, std::span<double>(est.values.data(), h + 1));
    for (int i = 1; i < h; ++i) est.values[full - i] = est.values[i];
    est.mass = quadrature_sum(est.values, g.weight);
  } else {
    const auto i_vals = periodogram(t, a, b);
    est = smooth(i_vals, m, g);
  }
  est.seg_len = b - a;
  if (!(est.mass >= detail::kZeroMass)) {
    throw Error(ErrorCode::ZeroSegment, "segment (" + std::to_string(a) + ", " +
                                            std::to_string(b) + "] has zero spectral mass");
  }
  return est;
}

inline SpectralEstimate pooled_baseline(const DftTable& t, double alpha) {
  return segment_spectrum(t, 0, t.n(), alpha);
}

inline SpectralEstimate white_noise_baseline(const FrequencyGrid& g) {
  SpectralEstimate est;
  est.grid = g;
  est.values.assign(g.size(), 1.0 / (2.0 * std::numbers::pi));
  est.mass = quadrature_sum(est.values, g.weight);
  est.bandwidth_m = 1;
  return est;
}

}  // namespace specseg
