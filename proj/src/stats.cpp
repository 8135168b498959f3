#include "gaat/stats.hpp"

#include <algorithm>
#include <cmath>

#include "gaat/errors.hpp"

namespace gaat {

double percentile_linear(std::vector<double> values, double q) {
  if (values.empty()) throw ConfigError("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("percentile quantile outside [0,1]");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * q;
  const double lo = std::floor(h);
  const auto i = static_cast<std::size_t>(lo);
  if (i + 1 >= values.size()) return values.back();
  return values[i] + (h - lo) * (values[i + 1] - values[i]);
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

std::pair<double, double> bootstrap_ci(std::span<const double> values, int resamples, double level,
                                       std::uint64_t seed) {
  if (values.size() < 2) throw ConfigError("bootstrap CI needs at least two runs");
  if (resamples < 1) throw ConfigError("bootstrap needs at least one resample");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level outside (0,1)");
  Rng rng(seed);
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += values[rng.index(values.size())];
    means.push_back(s / static_cast<double>(values.size()));
  }
  const double alpha = 1.0 - level;
  return {percentile_linear(means, alpha / 2.0), percentile_linear(means, 1.0 - alpha / 2.0)};
}

std::pair<double, double> bootstrap_ratio_ci(std::span<const double> numerators, std::span<const double> denominators,
                                             int resamples, double level, std::uint64_t seed) {
  if (numerators.size() != denominators.size()) throw ConfigError("ratio bootstrap needs paired values");
  const std::size_t n = numerators.size();
  if (n < 2) throw ConfigError("bootstrap CI needs at least two runs");
  if (resamples < 1) throw ConfigError("bootstrap needs at least one resample");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level outside (0,1)");
  Rng rng(seed);
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = rng.index(n);
      num += numerators[j];
      den += denominators[j];
    }
    stats.push_back(den > 0.0 ? num / den : 0.0);
  }
  const double alpha = 1.0 - level;
  return {percentile_linear(stats, alpha / 2.0), percentile_linear(stats, 1.0 - alpha / 2.0)};
}

}  // namespace gaat
