#include <doctest.h>

#include <charconv>
#include <fstream>

#include "gaat/stats.hpp"
#include "generators.hpp"

using namespace gaat;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out{""};
  for (char c : s) {
    if (c == sep) {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

std::vector<double> reals(const std::string& s) {
  std::vector<double> out;
  if (s.empty()) return out;
  for (const auto& x : split(s, ';')) out.push_back(std::stod(x));
  return out;
}

std::vector<std::vector<std::string>> golden(const std::string& kind) {
  std::ifstream in(std::string(GAAT_TEST_DATA_DIR) + "/canonical_golden.txt");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    auto f = split(line, '|');
    if (f[0] == kind) rows.push_back(std::move(f));
  }
  REQUIRE_FALSE(rows.empty());
  return rows;
}

}  // namespace

TEST_CASE("Rng is the standard mt19937_64 stream") {
  for (const auto& f : golden("mt")) {
    Rng rng(std::stoull(f[1]));
    std::uint64_t v = 0;
    for (int i = 0; i < 10000; ++i) v = rng.next_u64();
    CHECK(v == std::stoull(f[2]));
  }
}

TEST_CASE("Rng mappings stay in range") {
  Rng rng(3);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(rng.index(7) < 7);
  }
}

TEST_CASE("derive_seed separates streams") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(9, 4) == derive_seed(9, 4));
}

TEST_CASE("bootstrap of {0.96..1.00} brackets the mean inside the sample range") {
  const std::vector<double> v{0.96, 0.97, 0.98, 0.99, 1.00};
  const auto [lo, hi] = bootstrap_ci(v);
  CHECK(lo >= 0.96);
  CHECK(hi <= 1.00);
  CHECK(lo <= mean(v));
  CHECK(hi >= mean(v));
}

TEST_CASE("bootstrap matches the independent reimplementation") {
  for (const auto& f : golden("boot")) {
    CAPTURE(f[1]);
    CAPTURE(f[2]);
    const std::uint64_t seed = std::stoull(f[2]);
    const int resamples = std::stoi(f[3]);
    const double level = std::stod(f[4]);
    const auto nums = reals(f[5]);
    const auto dens = reals(f[6]);
    const auto [lo, hi] = f[1] == "mean" ? bootstrap_ci(nums, resamples, level, seed)
                                         : bootstrap_ratio_ci(nums, dens, resamples, level, seed);
    CHECK(lo == doctest::Approx(std::stod(f[7])).epsilon(1e-12));
    CHECK(hi == doctest::Approx(std::stod(f[8])).epsilon(1e-12));
  }
}

TEST_CASE("bootstrap is reproducible and validates inputs") {
  const std::vector<double> v{1.0, 2.0, 4.0, 8.0};
  CHECK(bootstrap_ci(v) == bootstrap_ci(v));
  const std::vector<double> wide{0.11, 0.93, 0.42, 0.57, 0.08, 0.66, 0.29, 0.81, 0.35, 0.74, 0.5, 0.19};
  CHECK(bootstrap_ci(wide, 1000, 0.95, 1) != bootstrap_ci(wide, 1000, 0.95, 2));
  CHECK_THROWS_AS((void)bootstrap_ci(std::vector<double>{1.0}), ConfigError);
  CHECK_THROWS_AS((void)bootstrap_ci(v, 0), ConfigError);
  CHECK_THROWS_AS((void)bootstrap_ci(v, 100, 1.0), ConfigError);
  const std::vector<double> d{1.0, 1.0, 1.0};
  CHECK_THROWS_AS((void)bootstrap_ratio_ci(v, d), ConfigError);
  const std::vector<double> zeros{0.0, 0.0};
  CHECK(bootstrap_ratio_ci(zeros, zeros) == std::pair<double, double>{0.0, 0.0});
}

TEST_CASE("property: constant samples give a degenerate interval") {
  testgen::for_each_case(200, [](Rng& rng) {
    const double c = rng.uniform(-5.0, 5.0);
    const std::vector<double> v(2 + rng.index(20), c);
    const auto [lo, hi] = bootstrap_ci(v, 200, 0.95, rng.next_u64());
    REQUIRE(lo == doctest::Approx(c).epsilon(1e-12));
    REQUIRE(hi == doctest::Approx(c).epsilon(1e-12));
  });
}

TEST_CASE("property: interval lies within the sample range and is ordered") {
  testgen::for_each_case(300, [](Rng& rng) {
    std::vector<double> v(2 + rng.index(15));
    for (auto& x : v) x = rng.uniform(0.0, 1.0);
    const auto [lo, hi] = bootstrap_ci(v, 300, 0.9, rng.next_u64());
    REQUIRE(lo <= hi);
    REQUIRE(lo >= *std::min_element(v.begin(), v.end()) - 1e-12);
    REQUIRE(hi <= *std::max_element(v.begin(), v.end()) + 1e-12);
  });
}

TEST_CASE("percentile edge cases") {
  CHECK_THROWS_AS((void)percentile_linear({}, 0.5), ConfigError);
  CHECK_THROWS_AS((void)percentile_linear({1.0}, 1.5), ConfigError);
  CHECK(percentile_linear({4.0, 1.0}, 0.0) == 1.0);
  CHECK(mean(std::vector<double>{}) == 0.0);
}
