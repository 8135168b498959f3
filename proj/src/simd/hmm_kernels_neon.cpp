// AArch64 variant; NEON is part of the base ISA there so no runtime probe is needed.
#include <arm_neon.h>

#include "gaat/simd/hmm_kernels.hpp"

namespace gaat::simd {

namespace {

void vec_mat(const double* v, const double* m, std::size_t rows, std::size_t cols, double* out) {
  for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const float64x2_t vi = vdupq_n_f64(v[i]);
    const double* row = m + i * cols;
    std::size_t j = 0;
    for (; j + 2 <= cols; j += 2) vst1q_f64(out + j, vfmaq_f64(vld1q_f64(out + j), vi, vld1q_f64(row + j)));
    for (; j < cols; ++j) out[j] += v[i] * row[j];
  }
}

void mat_vec(const double* m, const double* v, std::size_t rows, std::size_t cols, double* out) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = m + i * cols;
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t j = 0;
    for (; j + 2 <= cols; j += 2) acc = vfmaq_f64(acc, vld1q_f64(row + j), vld1q_f64(v + j));
    double s = vaddvq_f64(acc);
    for (; j < cols; ++j) s += row[j] * v[j];
    out[i] = s;
  }
}

void mul(const double* a, const double* b, std::size_t n, double* out) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

double sum(const double* a, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(a + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += a[i];
  return s;
}

void scale(double* a, std::size_t n, double s) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(a + i, vmulq_n_f64(vld1q_f64(a + i), s));
  for (; i < n; ++i) a[i] *= s;
}

void axpy_mul(double* acc, const double* a, const double* b, std::size_t n, double s) {
  const float64x2_t vs = vdupq_n_f64(s);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t prod = vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    vst1q_f64(acc + i, vfmaq_f64(vld1q_f64(acc + i), vs, prod));
  }
  for (; i < n; ++i) acc[i] += s * a[i] * b[i];
}

constexpr HmmKernels kNeon{"neon", vec_mat, mat_vec, mul, sum, scale, axpy_mul};

}  // namespace

namespace detail {
const HmmKernels* neon_table() { return &kNeon; }
}  // namespace detail

}  // namespace gaat::simd
