// AVX2/FMA variant of the weighted Gram kernel. Compiled with -mavx2 -mfma;
// only reached through the runtime dispatcher after a CPUID check.

#include "sddr/kernels.hpp"

#include <immintrin.h>

#include <vector>

namespace sddr::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// sum_q x(q) y(q), x already carries the weights.
inline double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t q = 0;
  for (; q + 8 <= n; q += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + q), _mm256_loadu_pd(y + q), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + q + 4), _mm256_loadu_pd(y + q + 4), acc1);
  }
  for (; q + 4 <= n; q += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + q), _mm256_loadu_pd(y + q), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; q < n; ++q) {
    s += x[q] * y[q];
  }
  return s;
}

// Four dot products sharing the left operand.
inline void dot4(const double* x, const double* y0, const double* y1, const double* y2,
                 const double* y3, std::size_t n, double* res) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  __m256d a2 = _mm256_setzero_pd();
  __m256d a3 = _mm256_setzero_pd();
  std::size_t q = 0;
  for (; q + 4 <= n; q += 4) {
    const __m256d xv = _mm256_loadu_pd(x + q);
    a0 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(y0 + q), a0);
    a1 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(y1 + q), a1);
    a2 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(y2 + q), a2);
    a3 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(y3 + q), a3);
  }
  res[0] = hsum(a0);
  res[1] = hsum(a1);
  res[2] = hsum(a2);
  res[3] = hsum(a3);
  for (; q < n; ++q) {
    res[0] += x[q] * y0[q];
    res[1] += x[q] * y1[q];
    res[2] += x[q] * y2[q];
    res[3] += x[q] * y3[q];
  }
}

}  // namespace

double weighted_dot(const double* x, const double* y, const double* w, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t q = 0;
  for (; q + 4 <= n; q += 4) {
    const __m256d xw = _mm256_mul_pd(_mm256_loadu_pd(x + q), _mm256_loadu_pd(w + q));
    acc = _mm256_fmadd_pd(xw, _mm256_loadu_pd(y + q), acc);
  }
  double s = hsum(acc);
  for (; q < n; ++q) {
    s += x[q] * w[q] * y[q];
  }
  return s;
}

void weighted_gram(SampleView a, SampleView b, const double* w, OutputView out, bool accumulate) {
  const std::size_t n = a.cols;
  thread_local std::vector<double> aw;
  aw.resize(n);
  double res[4];
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* ai = a.data + i * a.stride;
    std::size_t q = 0;
    for (; q + 4 <= n; q += 4) {
      _mm256_storeu_pd(aw.data() + q,
                       _mm256_mul_pd(_mm256_loadu_pd(ai + q), _mm256_loadu_pd(w + q)));
    }
    for (; q < n; ++q) {
      aw[q] = ai[q] * w[q];
    }
    double* oi = out.data + i * out.stride;
    std::size_t j = 0;
    for (; j + 4 <= b.rows; j += 4) {
      const double* bj = b.data + j * b.stride;
      dot4(aw.data(), bj, bj + b.stride, bj + 2 * b.stride, bj + 3 * b.stride, n, res);
      for (int r = 0; r < 4; ++r) {
        oi[j + r] = accumulate ? oi[j + r] + res[r] : res[r];
      }
    }
    for (; j < b.rows; ++j) {
      const double v = dot(aw.data(), b.data + j * b.stride, n);
      oi[j] = accumulate ? oi[j] + v : v;
    }
  }
}

}  // namespace sddr::kernels::avx2
