#include <doctest.h>

#include <cmath>
#include <limits>

#include "gaat/core_model.hpp"
#include "generators.hpp"

using namespace gaat;

namespace {

GovernanceTelemetryEvent event_with(Classification c, Jurisdiction j, Sensitivity s) {
  GovernanceTelemetryEvent e;
  e.timestamp = 1.0;
  e.source = AgentId("a");
  e.receiver = AgentId("b");
  e.operation = "op";
  e.governance.classification = c;
  e.governance.jurisdiction = j;
  e.governance.sensitivity = s;
  return e;
}

}  // namespace

TEST_CASE("tier: EU PII is high risk and fails closed") {
  const auto t = derive_risk_tier(event_with(Classification::Pii, Jurisdiction::Eu, Sensitivity::High),
                                  TierConfig::defaults());
  CHECK(t.tier == Tier::High);
  CHECK(t.fail_mode == FailMode::FailClosed);
}

TEST_CASE("tier: public low sensitivity falls in the default bucket") {
  const auto t = derive_risk_tier(event_with(Classification::Public, Jurisdiction::Us, Sensitivity::Low),
                                  TierConfig::defaults());
  CHECK(t.tier == Tier::Low);
  CHECK(t.fail_mode == FailMode::FailOpen);
}

TEST_CASE("tier: financial US is medium") {
  const auto t = derive_risk_tier(event_with(Classification::Financial, Jurisdiction::Us, Sensitivity::Medium),
                                  TierConfig::defaults());
  CHECK(t.tier == Tier::Medium);
}

TEST_CASE("tier: full 4x3x3 grid matches the documented default table") {
  const TierConfig cfg = TierConfig::defaults();
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t s = 0; s < 3; ++s) {
        const auto cc = static_cast<Classification>(c);
        const auto jj = static_cast<Jurisdiction>(j);
        const auto ss = static_cast<Sensitivity>(s);
        Tier expected = Tier::Low;
        if (cc == Classification::Pii && jj == Jurisdiction::Eu) {
          expected = Tier::High;
        } else if (cc == Classification::Financial || ss == Sensitivity::High) {
          expected = Tier::Medium;
        }
        CAPTURE(c);
        CAPTURE(j);
        CAPTURE(s);
        const auto ev = event_with(cc, jj, ss);
        CHECK(derive_risk_tier(ev, cfg).tier == expected);
        CHECK(derive_risk_tier(ev, cfg) == derive_risk_tier(ev, cfg));
      }
    }
  }
}

TEST_CASE("tier: table and fail modes are configurable") {
  TierConfig cfg = TierConfig::defaults();
  cfg.set_tier(Classification::Public, Jurisdiction::Us, Sensitivity::Low, Tier::High);
  cfg.set_fail_mode(Tier::High, FailMode::FailOpen);
  const auto t = derive_risk_tier(event_with(Classification::Public, Jurisdiction::Us, Sensitivity::Low), cfg);
  CHECK(t.tier == Tier::High);
  CHECK(t.fail_mode == FailMode::FailOpen);
}

TEST_CASE("enum names round-trip and reject unknown text") {
  for (std::size_t i = 0; i < enum_count<Verification>(); ++i) {
    const auto v = static_cast<Verification>(i);
    CHECK(parse_enum<Verification>(to_string(v)) == v);
  }
  CHECK(enum_count<Verification>() == 3);
  CHECK_FALSE(try_parse_enum<Verification>("true").has_value());
  CHECK_THROWS_AS((void)parse_enum<ViolationType>("NOPE"), ParseError);
}

TEST_CASE("agent ids must be non-empty") { CHECK_THROWS_AS(AgentId(""), ConfigError); }

TEST_CASE("system: registration errors") {
  MultiAgentSystem s;
  s.add_agent(AgentId("a"), {"x"}, 0.5, Jurisdiction::Eu);
  CHECK_THROWS_AS(s.add_agent(AgentId("a"), {}, 1.0, Jurisdiction::Eu), ConfigError);
  CHECK_THROWS_AS(s.add_agent(AgentId("b"), {""}, 1.0, Jurisdiction::Eu), ConfigError);
  CHECK_THROWS_AS(s.add_agent(AgentId("c"), {}, 1.5, Jurisdiction::Eu), ConfigError);
  CHECK_THROWS_AS(s.add_channel(AgentId("a"), AgentId("zz"), "l"), ConfigError);
  CHECK(s.jurisdiction(AgentId("a")) == Jurisdiction::Eu);
  CHECK_FALSE(s.find_jurisdiction(AgentId("zz")).has_value());
}

TEST_CASE("property: trust stays in [0,1] after every mutation") {
  testgen::for_each_case(2000, [](Rng& rng) {
    MultiAgentSystem s;
    const AgentId a("a");
    s.add_agent(a, {"x"}, rng.uniform01(), Jurisdiction::Us);
    for (int step = 0; step < 20; ++step) {
      double v = rng.uniform(-3.0, 3.0);
      if (rng.bernoulli(0.05)) v = std::numeric_limits<double>::quiet_NaN();
      if (rng.bernoulli(0.05)) v = std::numeric_limits<double>::infinity();
      s.set_trust(a, v);
      const double t = s.trust(a);
      REQUIRE(t >= 0.0);
      REQUIRE(t <= 1.0);
    }
  });
}

TEST_CASE("event validation") {
  auto e = event_with(Classification::Public, Jurisdiction::Eu, Sensitivity::Low);
  CHECK_NOTHROW(validate_event(e));
  e.timestamp = 0.0;
  CHECK_THROWS_AS(validate_event(e), ConfigError);
  e.timestamp = 2.0;
  e.receiver = e.source;
  CHECK_THROWS_AS(validate_event(e), ConfigError);
  CHECK_NOTHROW(validate_event(e, {"op"}));
}
