#include <doctest.h>

#include <cmath>

#include "gaat/reports.hpp"
#include "gaat/sim_harness.hpp"
#include "generators.hpp"

using namespace gaat;

namespace {

ScenarioConfig small(int runs = 2, int flows = 500) {
  ScenarioConfig c;
  c.runs = runs;
  c.flows_per_run = flows;
  c.noise_epsilon = 0.0;
  c.bootstrap_resamples = 200;
  return c;
}

int injected_count(const RunStream& s) {
  int n = 0;
  for (const auto& f : s.flows) n += f.injected ? 1 : 0;
  return n;
}

const double* real_ctx(const GovernanceTelemetryEvent& e, const std::string& key) {
  const auto it = e.context.find(key);
  return it == e.context.end() ? nullptr : std::get_if<double>(&it->second);
}

}  // namespace

TEST_CASE("apportion: largest remainder with rotating ties") {
  const std::vector<double> uniform{1.0, 1.0, 1.0, 1.0};
  CHECK(apportion(25, uniform) == std::vector<int>{7, 6, 6, 6});
  CHECK(apportion(25, uniform, 1) == std::vector<int>{6, 7, 6, 6});
  CHECK(apportion(0, uniform) == std::vector<int>{0, 0, 0, 0});
  const std::vector<double> mix{0.18, 0.35, 0.47};
  CHECK(apportion(500, mix) == std::vector<int>{90, 175, 235});
  testgen::for_each_case(500, [](Rng& rng) {
    std::vector<double> w(1 + rng.index(6));
    for (auto& x : w) x = rng.uniform(0.0, 1.0) + 1e-3;
    const int total = static_cast<int>(rng.index(1000));
    const auto a = apportion(total, w, rng.index(7));
    int sum = 0;
    double wsum = 0.0;
    for (double x : w) wsum += x;
    for (std::size_t i = 0; i < w.size(); ++i) {
      sum += a[i];
      REQUIRE(std::abs(a[i] - total * w[i] / wsum) < 1.0 + 1e-9);
    }
    REQUIRE(sum == total);
  });
}

TEST_CASE("500 flows at rate 0.05 inject exactly 25 violations") {
  const auto c = small();
  for (std::size_t r = 0; r < 10; ++r) {
    const auto s = generate_run(c, r);
    CAPTURE(r);
    CHECK(s.flows.size() == 500);
    CHECK(injected_count(s) == 25);
    std::array<int, 4> per{};
    for (const auto& f : s.flows) {
      if (f.injected) ++per[static_cast<std::size_t>(*f.injected)];
    }
    for (int k : per) CHECK((k == 6 || k == 7));
  }
}

TEST_CASE("rate 0 injects nothing") {
  auto c = small();
  c.injection_rate = 0.0;
  CHECK(injected_count(generate_run(c, 0)) == 0);
}

TEST_CASE("streams are seed-deterministic") {
  const auto c = small();
  CHECK(stream_digest(generate_run(c, 3)) == stream_digest(generate_run(c, 3)));
  CHECK(stream_digest(generate_run(c, 3)) != stream_digest(generate_run(c, 4)));
  auto other = c;
  other.seed += 1;
  CHECK(stream_digest(generate_run(c, 3)) != stream_digest(generate_run(other, 3)));
}

TEST_CASE("tier mix within 3 pp of 18/35/47 at 500 flows") {
  const auto c = small();
  for (std::size_t r = 0; r < 10; ++r) {
    std::array<int, 3> n{};
    for (const auto& f : generate_run(c, r).flows) ++n[static_cast<std::size_t>(f.tier)];
    CAPTURE(r);
    CHECK(std::abs(n[0] / 500.0 - 0.18) <= 0.03);
    CHECK(std::abs(n[1] / 500.0 - 0.35) <= 0.03);
    CHECK(std::abs(n[2] / 500.0 - 0.47) <= 0.03);
  }
}

TEST_CASE("flows are four hops and derive the declared tier") {
  const auto c = small();
  const auto tiers = c.tiers();
  for (const auto& f : generate_run(c, 0).flows) {
    REQUIRE(f.hops.size() == static_cast<std::size_t>(scenario::kHops));
    REQUIRE(derive_risk_tier(f.hops[0], tiers).tier == f.tier);
    for (std::size_t h = 1; h < f.hops.size(); ++h) REQUIRE(f.hops[h].timestamp > f.hops[h - 1].timestamp);
  }
}

TEST_CASE("bias ground truth is unambiguous") {
  const auto s = generate_run(small(), 1);
  for (const auto& f : s.flows) {
    for (const auto& e : f.hops) {
      if (const double* di = real_ctx(e, "disparate_impact")) {
        if (f.injected == ViolationType::BiasThreshold) {
          continue;
        }
        REQUIRE(*di <= 0.15);
      }
    }
    if (f.injected == ViolationType::BiasThreshold) {
      bool any = false;
      for (const auto& e : f.hops) {
        if (const double* di = real_ctx(e, "disparate_impact"); di && *di > 0.15) any = true;
      }
      REQUIRE(any);
    }
  }
}

TEST_CASE("FULL mode at eps=0 prevents every injected kind with no false positives") {
  const auto r = run_scenario(small(2));
  REQUIRE(r.vpr.has_value());
  CHECK(*r.vpr == 1.0);
  CHECK(r.fpr == 0.0);
  for (const auto& k : r.kinds) {
    CHECK(k.injected > 0);
    CHECK(k.prevented == k.injected);
  }
  CHECK(r.audit_totality);
  CHECK(r.fail_closed_breaches == 0);
  CHECK(r.post_quarantine_completions == 0);
}

TEST_CASE("accounting identities hold per run") {
  auto c = small(3);
  c.noise_epsilon = 0.02;
  const auto r = run_scenario(c);
  for (const auto& m : r.runs) {
    CHECK(m.flows == 500);
    CHECK(m.injected() == 25);
    CHECK(m.legit_flows == 475);
    int prevented = 0;
    for (const auto& k : m.kinds) {
      CHECK(k.prevented <= k.injected);
      prevented += k.prevented;
    }
    CHECK(prevented == m.prevented());
    const auto& res = m.kinds[static_cast<std::size_t>(ViolationType::DataResidency)];
    CHECK(m.residency_chain.injected + m.residency_direct.injected == res.injected);
    CHECK(m.residency_chain.prevented + m.residency_direct.prevented == res.prevented);
    CHECK(m.audit_records == m.processed_events);
    CHECK(m.legit_enforced <= m.legit_flows);
    CHECK(m.fpr() == doctest::Approx(static_cast<double>(m.legit_enforced) / m.legit_flows));
  }
}

TEST_CASE("boundary-only mode lets chain residency escape, others still caught") {
  auto c = small(2);
  c.mode = EnforcementMode::BoundaryOnly;
  const auto r = run_scenario(c);
  REQUIRE(r.residency_chain.injected > 0);
  CHECK(r.residency_chain.prevented == 0);
  CHECK(r.residency_direct.prevented == r.residency_direct.injected);
  for (auto v : {ViolationType::ConsentMissing, ViolationType::BiasThreshold, ViolationType::UnauthorizedAccess}) {
    const auto& k = r.kinds[static_cast<std::size_t>(v)];
    CHECK(k.prevented == k.injected);
  }
  CHECK(*r.vpr < 1.0);
}

TEST_CASE("observe-only: VPR 0 and FPR 0") {
  auto c = small(1);
  c.mode = EnforcementMode::ObserveOnly;
  const auto r = run_scenario(c);
  CHECK(*r.vpr == 0.0);
  CHECK(r.fpr == 0.0);
}

TEST_CASE("property: VPR(FULL) >= VPR(BOUNDARY) >= VPR(OBSERVE) on every seed") {
  testgen::for_each_case(4, [](Rng& rng) {
    auto c = small(1, 200);
    c.seed = rng.next_u64();
    c.noise_epsilon = 0.02;
    std::array<double, 3> v{};
    for (std::size_t m = 0; m < 3; ++m) {
      c.mode = static_cast<EnforcementMode>(m);
      v[m] = run_scenario(c).vpr.value_or(0.0);
    }
    REQUIRE(v[0] >= v[1]);
    REQUIRE(v[1] >= v[2]);
  });
}

TEST_CASE("rate 0: average level 0 and VPR not applicable") {
  auto c = small(2);
  c.injection_rate = 0.0;
  const auto r = run_scenario(c);
  CHECK_FALSE(r.vpr.has_value());
  CHECK(r.avg_level == 0.0);
  CHECK(metrics_json(r)["vpr"].is_null());
}

TEST_CASE("identical configs give identical reports") {
  const auto c = small(2, 200);
  CHECK(render_json(metrics_json(run_scenario(c))) == render_json(metrics_json(run_scenario(c))));
}

TEST_CASE("identical per-run values give a degenerate interval") {
  RunMetrics m;
  m.flows = 10;
  m.legit_flows = 10;
  const auto r = summarize(small(), {m, m, m}, false);
  REQUIRE(r.fpr_ci.has_value());
  CHECK(r.fpr_ci->low == 0.0);
  CHECK(r.fpr_ci->high == 0.0);
}

TEST_CASE("sweep: average level rises from 5% to 10%") {
  const auto rows = sensitivity_sweep(small(2), {0.05, 0.10});
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].report.avg_level > rows[0].report.avg_level);
  CHECK(rows[0].rate == 0.05);
}

TEST_CASE("latency is only reported on request") {
  const auto c = small(1, 50);
  CHECK_FALSE(run_scenario(c).latency.has_value());
  const auto r = run_scenario(c, true);
  REQUIRE(r.latency.has_value());
  CHECK((*r.latency)[0] <= (*r.latency)[1]);
}
