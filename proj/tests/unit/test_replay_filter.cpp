#include <doctest.h>

#include "gaat/replay_filter.hpp"

using namespace gaat;

TEST_CASE("second delivery of (a1, 42) is a replay") {
  ReplayFilter f;
  const AgentId a1("a1");
  CHECK(f.check(42, a1, 1.0) == ReplayVerdict::Fresh);
  CHECK(f.check(42, a1, 1.5) == ReplayVerdict::Replay);
  CHECK(f.probably_contains(42, a1));
}

TEST_CASE("keys are per source") {
  ReplayFilter f;
  CHECK(f.check(42, AgentId("a1"), 1.0) == ReplayVerdict::Fresh);
  CHECK(f.check(42, AgentId("a2"), 1.0) == ReplayVerdict::Fresh);
  CHECK(f.check(43, AgentId("a1"), 1.0) == ReplayVerdict::Fresh);
  CHECK_FALSE(f.probably_contains(44, AgentId("a1")));
}

TEST_CASE("window: replays stay caught for half a window, then age out") {
  ReplayFilter f(ReplayFilterConfig{1000, 1e-4, 10.0});
  const AgentId a("a");
  CHECK(f.check(1, a, 100.0) == ReplayVerdict::Fresh);
  CHECK(f.check(1, a, 104.9) == ReplayVerdict::Replay);
  CHECK(f.check(2, a, 104.9) == ReplayVerdict::Fresh);
  CHECK(f.check(2, a, 109.8) == ReplayVerdict::Replay);
  CHECK(f.check(1, a, 130.0) == ReplayVerdict::Fresh);
}

TEST_CASE("bloom sizing follows the textbook formulas") {
  const auto b = BloomFilter::sized_for(1'000'000, 1e-4);
  // m = -n ln p / (ln 2)^2, k = (m/n) ln 2
  CHECK(b.bit_count() >= 19'170'000);
  CHECK(b.bit_count() <= 19'180'000);
  CHECK(b.hash_count() == 13);
  CHECK_THROWS_AS((void)BloomFilter::sized_for(0, 1e-4), ConfigError);
  CHECK_THROWS_AS((void)BloomFilter::sized_for(10, 1.5), ConfigError);
}

TEST_CASE("false positive rate stays near the configured target") {
  constexpr std::uint64_t n = 200'000;
  ReplayFilter f(ReplayFilterConfig{n, 1e-3, 1e9});
  const AgentId a("src");
  std::uint64_t early = 0;
  for (std::uint64_t i = 0; i < n; ++i) early += f.check(i * 2, a, 1.0) == ReplayVerdict::Replay ? 1 : 0;
  CHECK(early < n / 1000);
  for (std::uint64_t i = 0; i < n; ++i) REQUIRE(f.check(i * 2, a, 1.0) == ReplayVerdict::Replay);
  std::uint64_t fp = 0;
  for (std::uint64_t i = 0; i < n; ++i) fp += f.probably_contains(i * 2 + 1, a) ? 1 : 0;
  const double rate = static_cast<double>(fp) / static_cast<double>(n);
  CAPTURE(rate);
  CHECK(rate < 2e-3);
}
