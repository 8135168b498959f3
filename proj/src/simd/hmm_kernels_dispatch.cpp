#include <cstdlib>
#include <string_view>

#include "gaat/errors.hpp"
#include "gaat/simd/hmm_kernels.hpp"

namespace gaat::simd {

const HmmKernels* avx2_kernels() {
#if defined(GAAT_HAVE_AVX2_KERNELS)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? detail::avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const HmmKernels* neon_kernels() {
#if defined(GAAT_HAVE_NEON_KERNELS)
  return detail::neon_table();
#else
  return nullptr;
#endif
}

std::vector<const HmmKernels*> available_kernels() {
  std::vector<const HmmKernels*> out{&scalar_kernels()};
  if (const auto* k = avx2_kernels()) out.push_back(k);
  if (const auto* k = neon_kernels()) out.push_back(k);
  return out;
}

namespace {

const HmmKernels& select() {
  const char* forced = std::getenv("GAAT_SIMD");
  if (forced != nullptr && *forced != '\0') {
    const std::string_view want(forced);
    for (const auto* k : available_kernels()) {
      if (want == k->name) return *k;
    }
    throw ConfigError("GAAT_SIMD=" + std::string(want) + " is not available on this machine");
  }
  if (const auto* k = avx2_kernels()) return *k;
  if (const auto* k = neon_kernels()) return *k;
  return scalar_kernels();
}

}  // namespace

const HmmKernels& active_kernels() {
  static const HmmKernels& chosen = select();
  return chosen;
}

}  // namespace gaat::simd
