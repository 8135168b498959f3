// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "gaat/simd/hmm_kernels.hpp"

namespace gaat::simd {

namespace {

double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void vec_mat(const double* v, const double* m, std::size_t rows, std::size_t cols, double* out) {
  for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const __m256d vi = _mm256_set1_pd(v[i]);
    const double* row = m + i * cols;
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      _mm256_storeu_pd(out + j, _mm256_fmadd_pd(vi, _mm256_loadu_pd(row + j), _mm256_loadu_pd(out + j)));
    }
    for (; j < cols; ++j) out[j] += v[i] * row[j];
  }
}

void mat_vec(const double* m, const double* v, std::size_t rows, std::size_t cols, double* out) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = m + i * cols;
    __m256d acc = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(v + j), acc);
    double s = hsum(acc);
    for (; j < cols; ++j) s += row[j] * v[j];
    out[i] = s;
  }
}

void mul(const double* a, const double* b, std::size_t n, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

double sum(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i];
  return s;
}

void scale(double* a, std::size_t n, double s) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(a + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vs));
  for (; i < n; ++i) a[i] *= s;
}

void axpy_mul(double* acc, const double* a, const double* b, std::size_t n, double s) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(acc + i, _mm256_fmadd_pd(vs, prod, _mm256_loadu_pd(acc + i)));
  }
  for (; i < n; ++i) acc[i] += s * a[i] * b[i];
}

constexpr HmmKernels kAvx2{"avx2", vec_mat, mat_vec, mul, sum, scale, axpy_mul};

}  // namespace

namespace detail {
const HmmKernels* avx2_table() { return &kAvx2; }
}  // namespace detail

}  // namespace gaat::simd
