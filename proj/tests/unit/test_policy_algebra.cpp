#include <doctest.h>

#include <algorithm>
#include <bit>
#include <numeric>

#include "gaat/policy_algebra.hpp"
#include "generators.hpp"

using namespace gaat;
using testgen::constant_policy;

namespace {

GovernanceTelemetryEvent any_event() {
  GovernanceTelemetryEvent e;
  e.timestamp = 1.0;
  e.source = AgentId("a");
  e.receiver = AgentId("b");
  e.operation = "op";
  return e;
}

bool same_bits(const PolicyDecision& a, const PolicyDecision& b) {
  return a.action == b.action && std::bit_cast<std::uint64_t>(a.confidence) == std::bit_cast<std::uint64_t>(b.confidence);
}

}  // namespace

TEST_CASE("action_max ordering") {
  CHECK(action_max(Action::Deny, Action::Allow) == Action::Deny);
  CHECK(action_max(Action::Allow, Action::Allow) == Action::Allow);
  CHECK(action_max(Action::Flag, Action::Quarantine) == Action::Quarantine);
  CHECK(action_max(Action::Quarantine, Action::Deny) == Action::Deny);
}

TEST_CASE("action_max is associative, commutative and idempotent") {
  for (std::size_t i = 0; i < 4; ++i) {
    const auto a = static_cast<Action>(i);
    CHECK(action_max(a, a) == a);
    for (std::size_t j = 0; j < 4; ++j) {
      const auto b = static_cast<Action>(j);
      CHECK(action_max(a, b) == action_max(b, a));
      for (std::size_t k = 0; k < 4; ++k) {
        const auto c = static_cast<Action>(k);
        CHECK(action_max(action_max(a, b), c) == action_max(a, action_max(b, c)));
      }
    }
  }
}

TEST_CASE("decision confidence must lie in [0,1]") {
  CHECK_THROWS_AS((void)PolicyDecision::make(Action::Deny, 1.5), ConfigError);
  CHECK_THROWS_AS((void)PolicyDecision::make(Action::Deny, -0.1), ConfigError);
  CHECK(PolicyDecision::make(Action::Flag, 0.0).confidence == 0.0);
}

TEST_CASE("parallel: max action, max confidence") {
  const auto e = any_event();
  auto p = parallel_compose({constant_policy("p1", {Action::Deny, 0.7}), constant_policy("p2", {Action::Flag, 0.9})});
  CHECK(p(e) == PolicyDecision{Action::Deny, 0.9});
  auto single = parallel_compose({constant_policy("p1", {Action::Flag, 0.3})});
  CHECK(single(e) == PolicyDecision{Action::Flag, 0.3});
  CHECK_THROWS_AS((void)parallel_compose({}), ConfigError);
}

TEST_CASE("parallel: every evaluation order of a three-policy set agrees") {
  const auto e = any_event();
  std::vector<Policy> ps{constant_policy("p1", {Action::Flag, 0.3}), constant_policy("p2", {Action::Quarantine, 0.2}),
                         constant_policy("p3", {Action::Allow, 1.0})};
  std::vector<std::size_t> idx{0, 1, 2};
  do {
    std::vector<Policy> perm;
    for (auto i : idx) perm.push_back(ps[i]);
    CHECK(parallel_compose(perm)(e) == PolicyDecision{Action::Quarantine, 1.0});
  } while (std::next_permutation(idx.begin(), idx.end()));
}

TEST_CASE("sequential: deny short-circuits") {
  const auto e = any_event();
  auto calls = std::make_shared<int>(0);
  auto p = sequential_compose(constant_policy("p1", {Action::Deny, 0.8}),
                              testgen::counting_policy("p2", {Action::Quarantine, 1.0}, calls));
  CHECK(p(e) == PolicyDecision{Action::Deny, 0.8});
  CHECK(*calls == 0);
}

TEST_CASE("sequential: allow chain and action merge") {
  const auto e = any_event();
  CHECK(sequential_compose(constant_policy("a", {Action::Allow, 1.0}), constant_policy("b", {Action::Allow, 1.0}))(e) ==
        PolicyDecision{Action::Allow, 1.0});
  const auto p1 = constant_policy("p1", {Action::Flag, 0.4});
  const auto p2 = constant_policy("p2", {Action::Quarantine, 0.6});
  const auto seq = sequential_compose(p1, p2)(e);
  CHECK(seq == PolicyDecision{Action::Quarantine, 0.6});
  CHECK(seq.action == parallel_compose({p1, p2})(e).action);
}

TEST_CASE("policy set: one deny among 25 wins") {
  const auto e = any_event();
  std::vector<Policy> ps;
  for (int i = 0; i < 24; ++i) ps.push_back(constant_policy("a" + std::to_string(i), {Action::Allow, 0.5}));
  ps.insert(ps.begin() + 11, constant_policy("deny", {Action::Deny, 0.95}));
  CHECK(evaluate_policy_set(ps, e) == PolicyDecision{Action::Deny, 0.95});
  ps.erase(ps.begin() + 11);
  CHECK(evaluate_policy_set(ps, e) == PolicyDecision{Action::Allow, 0.5});
  ps.push_back(constant_policy("sure", {Action::Allow, 1.0}));
  ps.push_back(constant_policy("deny", {Action::Deny, 0.95}));
  CHECK(evaluate_policy_set(ps, e) == PolicyDecision{Action::Deny, 1.0});
}

TEST_CASE("policy set: deny confidence is the max over all members") {
  const auto e = any_event();
  std::vector<Policy> ps{constant_policy("d", {Action::Deny, 0.4}), constant_policy("f", {Action::Flag, 0.99}),
                         constant_policy("a", {Action::Allow, 0.5})};
  CHECK(evaluate_policy_set(ps, e) == PolicyDecision{Action::Deny, 0.99});
}

TEST_CASE("policy set: detailed result lists triggered members in order") {
  const auto e = any_event();
  std::vector<Policy> ps{constant_policy("a", {Action::Allow, 0.2}), constant_policy("f", {Action::Flag, 0.5}),
                         constant_policy("d", {Action::Deny, 0.9})};
  const auto r = evaluate_policy_set_detailed(ps, e);
  CHECK(r.decision == PolicyDecision{Action::Deny, 0.9});
  CHECK(r.triggered == std::vector<std::size_t>{1, 2});
}

TEST_CASE("property: monotonicity, adding a policy never lowers severity") {
  testgen::for_each_case(3000, [](Rng& rng) {
    const auto e = testgen::random_event(rng);
    auto set = testgen::random_policies(rng, 1 + rng.index(12));
    const auto before = evaluate_policy_set(set, e);
    set.insert(set.begin() + static_cast<std::ptrdiff_t>(rng.index(set.size() + 1)),
               rng.bernoulli(0.5) ? testgen::random_policies(rng, 1)[0]
                                  : constant_policy("extra", testgen::random_decision(rng)));
    const auto after = evaluate_policy_set(set, e);
    REQUIRE(severity(after.action) >= severity(before.action));
  });
}

TEST_CASE("property: random 6-policy sets are order-free over 100 permutations") {
  testgen::for_each_case(200, [](Rng& rng) {
    const auto e = testgen::random_event(rng);
    auto set = testgen::random_policies(rng, 6);
    const auto ref = evaluate_policy_set(set, e);
    for (int k = 0; k < 100; ++k) {
      for (std::size_t i = set.size(); i > 1; --i) std::swap(set[i - 1], set[rng.index(i)]);
      REQUIRE(same_bits(evaluate_policy_set(set, e), ref));
    }
  });
}

TEST_CASE("property: equal actions with distinct confidences, all permutations n<=5") {
  testgen::for_each_case(100, [](Rng& rng) {
    const auto e = any_event();
    const auto action = testgen::random_action(rng);
    const std::size_t n = 1 + rng.index(5);
    std::vector<Policy> ps;
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = rng.uniform01();
      best = std::max(best, c);
      ps.push_back(constant_policy("p" + std::to_string(i), {action, c}));
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    do {
      std::vector<Policy> perm;
      for (auto i : idx) perm.push_back(ps[i]);
      const auto d = evaluate_policy_set(perm, e);
      REQUIRE(d.action == action);
      REQUIRE(d.confidence == best);
    } while (std::next_permutation(idx.begin(), idx.end()));
  });
}
