#include "gaat/simd/hmm_kernels.hpp"

namespace gaat::simd {

namespace {

void vec_mat(const double* v, const double* m, std::size_t rows, std::size_t cols, double* out) {
  for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double vi = v[i];
    const double* row = m + i * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] += vi * row[j];
  }
}

void mat_vec(const double* m, const double* v, std::size_t rows, std::size_t cols, double* out) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = m + i * cols;
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += row[j] * v[j];
    out[i] = s;
  }
}

void mul(const double* a, const double* b, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

double sum(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i];
  return s;
}

void scale(double* a, std::size_t n, double s) {
  for (std::size_t i = 0; i < n; ++i) a[i] *= s;
}

void axpy_mul(double* acc, const double* a, const double* b, std::size_t n, double s) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += s * a[i] * b[i];
}

constexpr HmmKernels kScalar{"scalar", vec_mat, mat_vec, mul, sum, scale, axpy_mul};

}  // namespace

const HmmKernels& scalar_kernels() { return kScalar; }

}  // namespace gaat::simd
