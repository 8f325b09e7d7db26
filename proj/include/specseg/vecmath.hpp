#pragma once

#include <cmath>
#include <span>

#if defined(SPECSEG_HAS_LIBMVEC) && defined(__AVX2__) && defined(__x86_64__)
#include <immintrin.h>
extern "C" __m256d _ZGVdN4v_log(__m256d);  // glibc libmvec, AVX2 variant
#define SPECSEG_VECTOR_LOG 1
#endif

namespace specseg::detail {

// In-place natural log. Uses glibc's vector log (< 4 ulp) when the build
// links libmvec on AVX2 targets, std::log otherwise.
inline void log_inplace(std::span<double> x) {
  std::size_t i = 0;
#ifdef SPECSEG_VECTOR_LOG
  for (; i + 4 <= x.size(); i += 4) {
    _mm256_storeu_pd(x.data() + i, _ZGVdN4v_log(_mm256_loadu_pd(x.data() + i)));
  }
#endif
  for (; i < x.size(); ++i) x[i] = std::log(x[i]);
}

}  // namespace specseg::detail
