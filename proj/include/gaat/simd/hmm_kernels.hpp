#pragma once

#include <cstddef>
#include <vector>

// Dense kernels behind the HMM forward/backward passes. Each ISA variant lives
// in its own translation unit; active_kernels() picks one at runtime.
// GAAT_SIMD=scalar|avx2|neon in the environment forces a variant.

namespace gaat::simd {

struct HmmKernels {
  const char* name;
  /// out[j] = sum_i v[i] * m[i*cols + j]
  void (*vec_mat)(const double* v, const double* m, std::size_t rows, std::size_t cols, double* out);
  /// out[i] = sum_j m[i*cols + j] * v[j]
  void (*mat_vec)(const double* m, const double* v, std::size_t rows, std::size_t cols, double* out);
  /// out[i] = a[i] * b[i]
  void (*mul)(const double* a, const double* b, std::size_t n, double* out);
  double (*sum)(const double* a, std::size_t n);
  void (*scale)(double* a, std::size_t n, double s);
  /// acc[i] += s * a[i] * b[i]
  void (*axpy_mul)(double* acc, const double* a, const double* b, std::size_t n, double s);
};

[[nodiscard]] const HmmKernels& scalar_kernels();
/// nullptr when not compiled in or not supported by this CPU.
[[nodiscard]] const HmmKernels* avx2_kernels();
[[nodiscard]] const HmmKernels* neon_kernels();
/// Every variant usable on this machine, scalar first.
[[nodiscard]] std::vector<const HmmKernels*> available_kernels();
[[nodiscard]] const HmmKernels& active_kernels();

namespace detail {
const HmmKernels* avx2_table();
const HmmKernels* neon_table();
}  // namespace detail

}  // namespace gaat::simd
