#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "specseg/error.hpp"

namespace specseg {

// Counter-based generator: the i-th draw of stream `key` is the SplitMix64
// finalizer applied to key + (i + 1) * 0x9E3779B97F4A7C15, i.e. the i-th
// output of a SplitMix64 sequence seeded with `key`. Draws are pure
// functions of (key, i), so any index can be generated independently.
namespace rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t draw(std::uint64_t key, std::uint64_t counter) {
  return mix64(key + (counter + 1) * kGolden);
}

// Uniform on the open interval (0, 1).
inline double uniform(std::uint64_t key, std::uint64_t counter) {
  return (static_cast<double>(draw(key, counter) >> 11) + 0.5) * 0x1.0p-53;
}

// Independent stream keys derived from a parent seed.
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed) + (index + 1) * kGolden);
}

}  // namespace rng

enum class NoiseKind { Gaussian, ScaledT4 };

// Innovation xi_t for integer time t (negative t reaches into burn-in).
// Gaussian: N(0, 1) by Box-Muller. ScaledT4: t(4) / sqrt(2), variance 1.
inline double noise_at(NoiseKind kind, std::uint64_t seed, std::int64_t t) {
  const auto c = static_cast<std::uint64_t>(t);
  const double u1 = rng::uniform(rng::derive(seed, 0), c);
  const double u2 = rng::uniform(rng::derive(seed, 1), c);
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  if (kind == NoiseKind::Gaussian) return z;
  const double u3 = rng::uniform(rng::derive(seed, 2), c);
  const double u4 = rng::uniform(rng::derive(seed, 3), c);
  const double chi2_4 = -2.0 * std::log(u3 * u4);
  return z / std::sqrt(chi2_4 / 4.0) / std::numbers::sqrt2;
}

inline std::vector<double> draw_noise(NoiseKind kind, int n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::EmptyInput, "noise length must be >= 1");
  std::vector<double> out(n);
  for (int t = 0; t < n; ++t) out[t] = noise_at(kind, seed, t);
  return out;
}

// X_t - sum_i ar[i] X_{t-1-i} = sum_k ma[k] xi_{t-k}. An empty ma means ma = {1}.
struct LinearProcessSpec {
  std::vector<double> ar;
  std::vector<double> ma{1.0};
  NoiseKind noise = NoiseKind::Gaussian;

  friend bool operator==(const LinearProcessSpec&, const LinearProcessSpec&) = default;
};

struct PiecewiseSegment {
  int length = 0;
  LinearProcessSpec process;

  friend bool operator==(const PiecewiseSegment&, const PiecewiseSegment&) = default;
};

struct PiecewiseSpec {
  std::vector<PiecewiseSegment> segments;

  int total_length() const {
    int n = 0;
    for (const auto& s : segments) n += s.length;
    return n;
  }
  std::vector<int> change_points() const {
    std::vector<int> cps;
    int acc = 0;
    for (std::size_t k = 0; k + 1 < segments.size(); ++k) {
      acc += segments[k].length;
      cps.push_back(acc);
    }
    return cps;
  }

  friend bool operator==(const PiecewiseSpec&, const PiecewiseSpec&) = default;
};

// Causality of 1 - sum ar[i] z^{i+1}: all roots outside the unit circle iff
// every partial autocorrelation of the step-down recursion has |kappa| < 1.
inline bool is_causal(const std::vector<double>& ar) {
  std::vector<double> a = ar;
  for (int k = static_cast<int>(a.size()); k >= 1; --k) {
    const double kappa = a[k - 1];
    if (!(std::abs(kappa) < 1.0)) return false;
    std::vector<double> next(k - 1);
    const double denom = 1.0 - kappa * kappa;
    for (int j = 1; j < k; ++j) next[j - 1] = (a[j - 1] + kappa * a[k - j - 1]) / denom;
    a = std::move(next);
  }
  return true;
}

inline int burn_in_length(const LinearProcessSpec& spec) {
  const int p = static_cast<int>(spec.ar.size());
  const int q = std::max(0, static_cast<int>(spec.ma.size()) - 1);
  return std::max({500, 20 * p, q});
}

// Stationary simulation of one linear process. The MA part reads innovations
// from before the output window; the AR recursion starts from zero
// max(500, 20p, q) samples early and the burn-in is discarded.
inline std::vector<double> simulate_linear(const LinearProcessSpec& spec, int n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::EmptyInput, "simulation length must be >= 1");
  if (!spec.ar.empty() && !is_causal(spec.ar)) {
    throw Error(ErrorCode::NonCausalAR, "AR polynomial has a root on or inside the unit circle");
  }
  const std::vector<double> ma = spec.ma.empty() ? std::vector<double>{1.0} : spec.ma;
  const int p = static_cast<int>(spec.ar.size());
  const int q = static_cast<int>(ma.size()) - 1;
  const int burn = spec.ar.empty() ? 0 : burn_in_length(spec);
  const int total = burn + n;
  // xi for t in [-(burn + q), n).
  std::vector<double> xi(total + q);
  for (int i = 0; i < total + q; ++i) {
    xi[i] = noise_at(spec.noise, seed, static_cast<std::int64_t>(i) - burn - q);
  }
  std::vector<double> x(total);
  for (int i = 0; i < total; ++i) {
    double v = 0.0;
    for (int k = 0; k <= q; ++k) v += ma[k] * xi[i + q - k];
    for (int j = 1; j <= p && j <= i; ++j) v += spec.ar[j - 1] * x[i - j];
    x[i] = v;
  }
  return {x.begin() + burn, x.end()};
}

struct SimulatedSeries {
  std::vector<double> values;
  std::vector<int> change_points;
};

// Concatenates independent segment simulations; segment k draws from the
// stream derive(seed, k), so editing one segment leaves the others intact.
inline SimulatedSeries simulate_piecewise(const PiecewiseSpec& p, std::uint64_t seed) {
  if (p.segments.empty()) throw Error(ErrorCode::EmptyInput, "spec has no segments");
  SimulatedSeries out;
  for (std::size_t k = 0; k < p.segments.size(); ++k) {
    const auto& seg = p.segments[k];
    if (seg.length < 1) throw Error(ErrorCode::InvalidConfig, "segment length must be >= 1");
    const auto part = simulate_linear(seg.process, seg.length, rng::derive(seed, k));
    out.values.insert(out.values.end(), part.begin(), part.end());
  }
  out.change_points = p.change_points();
  return out;
}

// The four benchmark designs: AR (1), ARMA (2), invertible MA (3) and
// non-invertible MA (4).
inline PiecewiseSpec case_spec(int id, NoiseKind noise = NoiseKind::Gaussian) {
  auto seg = [noise](int len, std::vector<double> ar, std::vector<double> ma) {
    return PiecewiseSegment{len, LinearProcessSpec{std::move(ar), std::move(ma), noise}};
  };
  switch (id) {
    case 1:
      return {{seg(1024, {0.9}, {1.0}), seg(512, {1.69, -0.81}, {1.0}),
               seg(512, {1.32, -0.81}, {1.0})}};
    case 2:
      return {{seg(500, {1.0, -0.25}, {1.0, 0.8}), seg(600, {0.5}, {1.0}),
               seg(700, {1.7, -0.9, 0.168}, {1.0, -1.6, 0.79, -0.12})}};
    case 3:
      // (3+B)(2-B) = 6 - B - B^2, (3-B)(2-B) = 6 - 5B + B^2
      return {{seg(500, {}, {6.0, -1.0, -1.0}), seg(600, {}, {6.0, -5.0, 1.0}),
               seg(700, {}, {6.0, -1.0, -1.0})}};
    case 4:
      return {{seg(500, {}, {1.0, 2.0, 1.0, 5.0}), seg(600, {}, {1.0, -2.0, 2.0, -5.0}),
               seg(700, {}, {1.0, 2.0, -1.0, 5.0})}};
    default:
      throw Error(ErrorCode::UnknownCase, "case id must be 1..4, got " + std::to_string(id));
  }
}

// Case 1 processes with segment lengths n/2, n/4, n/4 (n divisible by 4).
inline PiecewiseSpec case1_scaled(int n, NoiseKind noise = NoiseKind::Gaussian) {
  if (n < 4 || n % 4 != 0) throw Error(ErrorCode::InvalidConfig, "scaled case 1 needs n divisible by 4");
  auto spec = case_spec(1, noise);
  spec.segments[0].length = n / 2;
  spec.segments[1].length = n / 4;
  spec.segments[2].length = n / 4;
  return spec;
}

// Plain-text spec files:
//
//   # comment
//   noise = gaussian            (default for later segments: gaussian | t4)
//   segment length=1024 ar=0.9
//   segment length=512 ar=1.69,-0.81 ma=1,0.8 noise=t4
//
// ar defaults to none, ma to 1.
namespace detail {

inline std::vector<double> parse_list(const std::string& text, int line_no) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": bad number '" + item + "'");
    }
  }
  return out;
}

inline NoiseKind parse_noise(const std::string& s, int line_no) {
  if (s == "gaussian") return NoiseKind::Gaussian;
  if (s == "t4") return NoiseKind::ScaledT4;
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": unknown noise '" + s + "'");
}

inline std::string format_list(const std::vector<double>& v) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

}  // namespace detail

inline PiecewiseSpec parse_piecewise_spec(const std::string& text) {
  PiecewiseSpec spec;
  NoiseKind noise = NoiseKind::Gaussian;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::string head;
    if (!(words >> head)) continue;
    if (head == "noise") {
      std::string eq, value;
      if (!(words >> eq >> value) || eq != "=") {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 'noise = <kind>'");
      }
      noise = detail::parse_noise(value, line_no);
      continue;
    }
    if (head != "segment") {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": unknown key '" + head + "'");
    }
    PiecewiseSegment seg;
    seg.process.noise = noise;
    bool has_length = false;
    std::string field;
    while (words >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected key=value, got '" + field + "'");
      }
      const std::string key = field.substr(0, eq);
      const std::string value = field.substr(eq + 1);
      if (key == "length") {
        const auto v = detail::parse_list(value, line_no);
        if (v.size() != 1 || v[0] < 1 || v[0] != std::floor(v[0])) {
          throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": length must be a positive integer");
        }
        seg.length = static_cast<int>(v[0]);
        has_length = true;
      } else if (key == "ar") {
        seg.process.ar = detail::parse_list(value, line_no);
      } else if (key == "ma") {
        seg.process.ma = detail::parse_list(value, line_no);
      } else if (key == "noise") {
        seg.process.noise = detail::parse_noise(value, line_no);
      } else {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": unknown field '" + key + "'");
      }
    }
    if (!has_length) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": segment needs length=");
    spec.segments.push_back(std::move(seg));
  }
  if (spec.segments.empty()) throw Error(ErrorCode::ParseError, "spec defines no segments");
  return spec;
}

inline std::string format_piecewise_spec(const PiecewiseSpec& spec) {
  std::ostringstream os;
  for (const auto& seg : spec.segments) {
    os << "segment length=" << seg.length;
    if (!seg.process.ar.empty()) os << " ar=" << detail::format_list(seg.process.ar);
    if (!seg.process.ma.empty()) os << " ma=" << detail::format_list(seg.process.ma);
    os << " noise=" << (seg.process.noise == NoiseKind::Gaussian ? "gaussian" : "t4") << '\n';
  }
  return os.str();
}

}  // namespace specseg
