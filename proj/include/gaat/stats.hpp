#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace gaat {

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream seed for item `index` under `master`.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// mt19937_64 (fully specified by the standard) with distribution mappings
/// written out here so results do not depend on the standard library vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform on {0, ..., n-1}; n must be > 0.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) % n;
  }
  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 engine_;
};

/// Linear interpolation between closest ranks: h = (n-1) q,
/// x[floor h] + (h - floor h) (x[floor h + 1] - x[floor h]). Sorts a copy.
[[nodiscard]] double percentile_linear(std::vector<double> values, double q);

[[nodiscard]] double mean(std::span<const double> values);

/// Percentile bootstrap of the mean over per-run values. Resample j draws n
/// indices with Rng(seed).index(n), in order. Throws ConfigError for fewer than
/// two values.
[[nodiscard]] std::pair<double, double> bootstrap_ci(std::span<const double> values, int resamples = 1000,
                                                     double level = 0.95, std::uint64_t seed = 0x5eed);

/// Same resampling scheme as bootstrap_ci, but each resample's statistic is
/// sum(numerators) / sum(denominators) (0 when the denominators sum to 0).
[[nodiscard]] std::pair<double, double> bootstrap_ratio_ci(std::span<const double> numerators,
                                                           std::span<const double> denominators, int resamples = 1000,
                                                           double level = 0.95, std::uint64_t seed = 0x5eed);

}  // namespace gaat
