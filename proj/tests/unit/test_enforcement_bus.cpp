#include <doctest.h>

#include <map>

#include "gaat/audit_record.hpp"
#include "gaat/enforcement_bus.hpp"
#include "generators.hpp"

using namespace gaat;

namespace {

const std::vector<std::string> kAgents{"order_agent", "inventory_agent", "payment_agent", "shipping_agent",
                                       "analytics_agent", "compliance_sink"};

struct Fixture {
  std::map<std::string, std::shared_ptr<const Signer>> signers;
  std::unique_ptr<EnforcementBus> bus;
  std::uint64_t nonce = 1;

  explicit Fixture(EnforcementMode mode = EnforcementMode::Full, RulePack pack = default_rule_pack(),
                   std::vector<Policy> extra = {}) {
    MultiAgentSystem s;
    s.add_agent(AgentId("order_agent"), {"reserve_inventory", "request_payment"}, 0.5, Jurisdiction::Eu);
    s.add_agent(AgentId("inventory_agent"), {"report_stock"}, 0.5, Jurisdiction::Eu);
    s.add_agent(AgentId("payment_agent"), {"schedule_shipment"}, 0.5, Jurisdiction::Eu);
    s.add_agent(AgentId("shipping_agent"), {"emit_analytics"}, 0.5, Jurisdiction::Us);
    s.add_agent(AgentId("analytics_agent"), {"publish_report"}, 0.5, Jurisdiction::Us);
    s.add_agent(AgentId("compliance_sink"), {"archive"}, 1.0, Jurisdiction::Eu);
    KeyRegistry keys;
    for (const auto& a : kAgents) {
      std::shared_ptr<const Signer> signer = EcdsaP256Signer::generate();
      keys.register_key(AgentId(a), signer->verification_key());
      signers[a] = signer;
    }
    BusConfig cfg;
    cfg.mode = mode;
    cfg.compliance_sink = AgentId("compliance_sink");
    cfg.extra_policies = std::move(extra);
    bus = std::make_unique<EnforcementBus>(cfg, s, pack, std::move(keys), MerkleAuditLog{});
  }

  GovernanceTelemetryEvent event(const std::string& src, const std::string& dst, const std::string& op, double t,
                                 Classification c = Classification::Public, Jurisdiction j = Jurisdiction::Eu,
                                 Sensitivity s = Sensitivity::Low) {
    GovernanceTelemetryEvent e;
    e.timestamp = t;
    e.source = AgentId(src);
    e.receiver = AgentId(dst);
    e.operation = op;
    e.nonce = nonce++;
    e.governance.classification = c;
    e.governance.jurisdiction = j;
    e.governance.sensitivity = s;
    e.governance.lineage = {AgentId(src)};
    return e;
  }

  GovernanceTelemetryEvent sign(GovernanceTelemetryEvent e) { return sign_event(std::move(e), signers.at(e.source.str()).get()); }
};

GovernanceRule redirect_rule() {
  return GovernanceRule{"redirect.us_pii", ViolationType::DataResidency,
                        {{"context.destination_jurisdiction", RuleOperator::Eq, std::string("US")}}, Action::Flag, 0.7, 3};
}

}  // namespace

TEST_CASE("gate_unverified follows the tier's fail mode") {
  const RiskTier high{Tier::High, FailMode::FailClosed};
  const RiskTier low{Tier::Low, FailMode::FailOpen};
  CHECK(gate_unverified(Verification::Unknown, high) == GateResult::DenyUnverified);
  CHECK(gate_unverified(Verification::False, high) == GateResult::DenyUnverified);
  CHECK(gate_unverified(Verification::Unknown, low) == GateResult::PassWithAlert);
  CHECK(gate_unverified(Verification::True, high) == GateResult::Proceed);
  CHECK(gate_unverified(Verification::True, low) == GateResult::Proceed);
}

TEST_CASE("action floors") {
  CHECK(action_floor(Action::Allow) == 0);
  CHECK(action_floor(Action::Flag) == 2);
  CHECK(action_floor(Action::Deny) == 0);
  CHECK(action_floor(Action::Quarantine) == 4);
}

TEST_CASE("verified clean event is allowed and trust recovers") {
  Fixture f;
  const double before = f.bus->system().trust(AgentId("order_agent"));
  const auto out = f.bus->process_event(f.sign(f.event("order_agent", "inventory_agent", "reserve_inventory", 1.0)));
  CHECK(out.applied_level == EnforcementLevel::L0Allow);
  CHECK(out.operation_completed);
  CHECK(out.verification == Verification::True);
  CHECK(out.reason == OutcomeReason::Policy);
  REQUIRE(out.decided_action.has_value());
  CHECK(out.decided_action->action == Action::Allow);
  CHECK(f.bus->system().trust(AgentId("order_agent")) == doctest::Approx(before + 0.01));
  CHECK(f.bus->audit().size() == 1);
}

TEST_CASE("verified EU PII residency violation is blocked and escalated") {
  Fixture f;
  auto e = f.event("shipping_agent", "analytics_agent", "emit_analytics", 5.0, Classification::Pii, Jurisdiction::Eu,
                   Sensitivity::High);
  e.context["destination_jurisdiction"] = std::string("US");
  const auto out = f.bus->process_event(f.sign(e));
  REQUIRE(out.decided_action.has_value());
  CHECK(out.decided_action->action == Action::Deny);
  CHECK_FALSE(out.operation_completed);
  CHECK(out.applied_level == EnforcementLevel::L2Flag);
  CHECK(out.violation == ViolationType::DataResidency);
  CHECK(std::find(out.matched_rules.begin(), out.matched_rules.end(), "residency.eu_pii_export") != out.matched_rules.end());
  CHECK(f.bus->escalation().state(AgentId("shipping_agent")).history.size() == 1);
  CHECK(f.bus->system().trust(AgentId("shipping_agent")) == doctest::Approx(0.5 * 0.8));
  CHECK(f.bus->audit().size() == 1);
}

TEST_CASE("replayed nonce is rejected before policy evaluation") {
  Fixture f;
  const auto e = f.sign(f.event("order_agent", "inventory_agent", "reserve_inventory", 1.0));
  CHECK(f.bus->process_event(e).operation_completed);
  const auto r = f.bus->process_event(e, 2.0);
  CHECK(r.reason == OutcomeReason::ReplayRejected);
  CHECK_FALSE(r.operation_completed);
  CHECK_FALSE(r.decided_action.has_value());
  CHECK(f.bus->counters().replay_rejected == 1);
  CHECK(f.bus->counters().policy_evaluations == 1);
  CHECK(f.bus->counters().audits == 2);
}

TEST_CASE("unverified events: HIGH tier denied unevaluated, LOW tier passes with alert") {
  Fixture f;
  const auto high = f.event("order_agent", "inventory_agent", "reserve_inventory", 1.0, Classification::Pii,
                            Jurisdiction::Eu, Sensitivity::High);
  const auto h = f.bus->process_event(high);
  CHECK(h.reason == OutcomeReason::FailClosedUnverified);
  CHECK_FALSE(h.decided_action.has_value());
  CHECK_FALSE(h.operation_completed);
  CHECK(h.tier == Tier::High);

  const auto low = f.bus->process_event(f.event("order_agent", "inventory_agent", "reserve_inventory", 2.0));
  CHECK(low.reason == OutcomeReason::FailOpenPass);
  CHECK(low.operation_completed);
  CHECK(low.decided_action.has_value());
  CHECK(f.bus->counters().gated == 2);
  CHECK(f.bus->alerts().back().kind == "FAIL_OPEN_PASS");

  auto forged = f.sign(f.event("order_agent", "inventory_agent", "reserve_inventory", 3.0, Classification::Pii,
                               Jurisdiction::Eu, Sensitivity::High));
  forged.operation = "request_payment";
  const auto fo = f.bus->process_event(forged);
  CHECK(fo.verification == Verification::False);
  CHECK(fo.reason == OutcomeReason::FailClosedUnverified);
}

TEST_CASE("QUARANTINE action: L4, capabilities cleared, later events denied until reset") {
  // alone: in the full pack the capability rule's DENY outranks QUARANTINE for this agent
  RulePack pack;
  for (const auto& r : default_rule_pack().rules) {
    if (r.id == "unauthorized.bulk_export") pack.rules.push_back(r);
  }
  REQUIRE(pack.rules.size() == 1);
  Fixture f(EnforcementMode::Full, pack);
  const auto q = f.bus->process_event(f.sign(f.event("payment_agent", "shipping_agent", "export_customer_db", 1.0)));
  CHECK(q.applied_level == EnforcementLevel::L4Quarantine);
  CHECK_FALSE(q.operation_completed);
  CHECK(f.bus->escalation().state(AgentId("payment_agent")).quarantined);
  CHECK(f.bus->system().capabilities(AgentId("payment_agent")).empty());

  const auto next = f.bus->process_event(f.sign(f.event("payment_agent", "shipping_agent", "schedule_shipment", 2.0)));
  CHECK(next.reason == OutcomeReason::Quarantined);
  CHECK(next.applied_level == EnforcementLevel::L4Quarantine);
  CHECK_FALSE(next.operation_completed);
  const auto inbound = f.bus->process_event(f.sign(f.event("order_agent", "payment_agent", "request_payment", 2.5)));
  CHECK_FALSE(inbound.operation_completed);

  const auto r = f.bus->reset_agent(AgentId("payment_agent"), "op-7", 3.0);
  CHECK(r.performed);
  CHECK(f.bus->system().capabilities(AgentId("payment_agent")) == std::set<Capability>{"schedule_shipment"});
  const auto after = f.bus->process_event(f.sign(f.event("payment_agent", "shipping_agent", "schedule_shipment", 4.0)));
  CHECK(after.operation_completed);
  CHECK(f.bus->audit().size() == 5);

  const auto noop = f.bus->reset_agent(AgentId("order_agent"), "op-7", 5.0);
  CHECK_FALSE(noop.performed);
  CHECK(f.bus->alerts().back().kind == "RESET_IGNORED");
}

TEST_CASE("L3 redirect delivers to the compliance sink, never the original receiver") {
  RulePack pack;
  pack.rules.push_back(redirect_rule());
  Fixture f(EnforcementMode::Full, pack);
  auto e = f.event("order_agent", "analytics_agent", "reserve_inventory", 1.0, Classification::Pii);
  e.context["destination_jurisdiction"] = std::string("US");
  const auto out = f.bus->process_event(f.sign(e));
  CHECK(out.applied_level == EnforcementLevel::L3Redirect);
  CHECK(out.redirected);
  CHECK(out.operation_completed);
  REQUIRE(out.delivered_to.has_value());
  CHECK(*out.delivered_to == AgentId("compliance_sink"));
}

TEST_CASE("DENY outranks QUARANTINE when both rules match") {
  Fixture f;
  const auto out = f.bus->process_event(f.sign(f.event("payment_agent", "shipping_agent", "export_customer_db", 1.0)));
  CHECK(out.decided_action->action == Action::Deny);
  CHECK_FALSE(out.operation_completed);
  CHECK(out.applied_level == EnforcementLevel::L2Flag);
}

TEST_CASE("unknown compliance sink is a configuration error") {
  MultiAgentSystem s;
  s.add_agent(AgentId("a"), {"x"}, 1.0, Jurisdiction::Eu);
  BusConfig cfg;
  cfg.compliance_sink = AgentId("nowhere");
  CHECK_THROWS_AS(EnforcementBus(cfg, s, default_rule_pack(), KeyRegistry{}, MerkleAuditLog{}), ConfigError);
}

TEST_CASE("observe-only mode records decisions but enforces nothing") {
  Fixture f(EnforcementMode::ObserveOnly);
  auto e = f.event("shipping_agent", "analytics_agent", "emit_analytics", 5.0, Classification::Pii);
  e.context["destination_jurisdiction"] = std::string("US");
  const auto out = f.bus->process_event(f.sign(e));
  CHECK(out.decided_action->action == Action::Deny);
  CHECK(out.operation_completed);
  CHECK(out.applied_level == EnforcementLevel::L0Allow);
  CHECK(f.bus->system().trust(AgentId("shipping_agent")) == 0.5);
}

TEST_CASE("boundary-only mode sees just the last lineage hop") {
  for (auto mode : {EnforcementMode::Full, EnforcementMode::BoundaryOnly}) {
    Fixture f(mode);
    auto e = f.event("payment_agent", "inventory_agent", "schedule_shipment", 1.0, Classification::Pii);
    e.governance.lineage = {AgentId("order_agent"), AgentId("shipping_agent"), AgentId("payment_agent")};
    const auto out = f.bus->process_event(f.sign(e));
    CAPTURE(to_string(mode));
    CHECK(out.operation_completed == (mode == EnforcementMode::BoundaryOnly));
  }
}

TEST_CASE("stage failure: fail-closed tier denies, fail-open tier passes with alert") {
  Policy boom("boom", [](const GovernanceTelemetryEvent&) -> PolicyDecision { throw std::runtime_error("rule engine down"); });
  Fixture f(EnforcementMode::Full, default_rule_pack(), {boom});
  const auto high = f.bus->process_event(f.sign(f.event("order_agent", "inventory_agent", "reserve_inventory", 1.0,
                                                        Classification::Pii, Jurisdiction::Eu, Sensitivity::High)));
  CHECK(high.reason == OutcomeReason::StageFailure);
  CHECK_FALSE(high.operation_completed);
  const auto low = f.bus->process_event(f.sign(f.event("order_agent", "inventory_agent", "reserve_inventory", 2.0)));
  CHECK(low.reason == OutcomeReason::StageFailure);
  CHECK(low.operation_completed);
  CHECK(low.applied_level == EnforcementLevel::L1Alert);
  CHECK(f.bus->counters().stage_failures == 2);
  CHECK(f.bus->audit().size() == 2);
}

TEST_CASE("unregistered lineage agent on a fail-closed tier is denied") {
  Fixture f;
  auto e = f.event("order_agent", "inventory_agent", "reserve_inventory", 1.0, Classification::Pii, Jurisdiction::Eu,
                   Sensitivity::High);
  e.governance.lineage = {AgentId("ghost"), AgentId("order_agent")};
  const auto out = f.bus->process_event(f.sign(e));
  CHECK(out.reason == OutcomeReason::LineageUnresolved);
  CHECK_FALSE(out.operation_completed);
}

TEST_CASE("persistent violator: levels never decrease until quarantine, then absorbed") {
  Fixture f;
  int last = 0;
  bool quarantined = false;
  for (int i = 0; i < 40; ++i) {
    auto e = f.event("shipping_agent", "analytics_agent", "emit_analytics", 1.0 + i * 5.0, Classification::Pii);
    e.context["destination_jurisdiction"] = std::string("US");
    const double trust_before = f.bus->system().trust(AgentId("shipping_agent"));
    const auto out = f.bus->process_event(f.sign(e));
    const int level = static_cast<int>(out.applied_level);
    CAPTURE(i);
    if (quarantined) {
      CHECK_FALSE(out.operation_completed);
      CHECK(out.reason == OutcomeReason::Quarantined);
      continue;
    }
    CHECK(level >= last);
    if (level >= 1 && trust_before > 0.0) CHECK(f.bus->system().trust(AgentId("shipping_agent")) < trust_before);
    last = level;
    quarantined = level == 4;
  }
  CHECK(quarantined);
}

TEST_CASE("alert lines are single-line sorted JSON") {
  const Alert a{1.5, "a1", "QUARANTINE", "agent \"x\"\nquarantined"};
  const std::string line = alert_json_line(a);
  CHECK(line.back() == '\n');
  CHECK(line.find('\n') == line.size() - 1);
  CHECK(line.find("\"agent\"") < line.find("\"detail\""));
  CHECK(line.find("\"kind\"") < line.find("\"time\""));
}

TEST_CASE("audit records round-trip") {
  AuditRecord r;
  r.kind = "ENFORCEMENT";
  r.time = 12.25;
  r.event_digest = sha256(std::string_view("e"));
  r.agent = "a";
  r.receiver = "b";
  r.action = "DENY";
  r.confidence = 0.95;
  r.applied_level = 2;
  r.matched_rules = {"x", "y"};
  CHECK(decode_audit_record(encode_audit_record(r)) == r);
  Bytes b = encode_audit_record(r);
  b.pop_back();
  CHECK_THROWS_AS((void)decode_audit_record(b), ParseError);
}

TEST_CASE("property: fail-closed safety, audit totality, replay before policy") {
  testgen::for_each_case(30, [](Rng& rng) {
    Fixture f;
    std::vector<GovernanceTelemetryEvent> sent;
    std::uint64_t replays = 0;
    for (int i = 0; i < 60; ++i) {
      const double t = 1.0 + i;
      GovernanceTelemetryEvent e;
      if (!sent.empty() && rng.bernoulli(0.1)) {
        e = sent[rng.index(sent.size())];
        ++replays;
      } else {
        const auto& src = kAgents[rng.index(5)];
        auto dst = kAgents[rng.index(5)];
        if (dst == src) dst = "compliance_sink";
        e = f.event(src, dst, rng.bernoulli(0.9) ? "reserve_inventory" : "export_customer_db", t,
                    static_cast<Classification>(rng.index(4)), static_cast<Jurisdiction>(rng.index(3)),
                    static_cast<Sensitivity>(rng.index(3)));
        if (rng.bernoulli(0.2)) e.context["destination_jurisdiction"] = std::string("US");
        const double u = rng.uniform01();
        if (u < 0.6) {
          e = f.sign(e);
        } else if (u < 0.8) {
          e = f.sign(e);
          e.operation = "publish_report";
        }
        sent.push_back(e);
      }
      const auto out = f.bus->process_event(e, t);
      const auto fm = TierConfig::defaults().fail_mode(out.tier);
      if (out.verification != Verification::True && fm == FailMode::FailClosed) REQUIRE_FALSE(out.operation_completed);
      if (out.applied_level == EnforcementLevel::L4Quarantine) REQUIRE_FALSE(out.operation_completed);
      if (out.reason == OutcomeReason::FailClosedUnverified || out.reason == OutcomeReason::ReplayRejected) {
        REQUIRE_FALSE(out.decided_action.has_value());
      }
    }
    const auto& c = f.bus->counters();
    REQUIRE(c.processed == 60);
    REQUIRE(c.audits == 60);
    REQUIRE(f.bus->audit().size() == 60);
    REQUIRE(c.replay_rejected == replays);
    REQUIRE(c.policy_evaluations <= c.processed - c.replay_rejected);
  });
}
