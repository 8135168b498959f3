#include <doctest.h>

#include <filesystem>

#include "gaat/policy_rules.hpp"
#include "generators.hpp"

using namespace gaat;

namespace {

std::shared_ptr<const RuleEnvironment> scenario_env() {
  MultiAgentSystem s;
  s.add_agent(AgentId("order_agent"), {"reserve_inventory", "request_payment"}, 1.0, Jurisdiction::Eu);
  s.add_agent(AgentId("inventory_agent"), {"report_stock"}, 1.0, Jurisdiction::Eu);
  s.add_agent(AgentId("payment_agent"), {"schedule_shipment"}, 1.0, Jurisdiction::Eu);
  s.add_agent(AgentId("shipping_agent"), {"emit_analytics"}, 1.0, Jurisdiction::Us);
  s.add_agent(AgentId("analytics_agent"), {"publish_report"}, 1.0, Jurisdiction::Us);
  return std::make_shared<const RuleEnvironment>(RuleEnvironment::from_system(s));
}

GovernanceTelemetryEvent hop(const std::string& src, const std::string& dst, std::vector<std::string> lineage) {
  GovernanceTelemetryEvent e;
  e.timestamp = 1.0;
  e.source = AgentId(src);
  e.receiver = AgentId(dst);
  e.operation = "emit_analytics";
  e.governance.classification = Classification::Pii;
  e.governance.jurisdiction = Jurisdiction::Eu;
  e.governance.sensitivity = Sensitivity::High;
  for (auto& l : lineage) e.governance.lineage.emplace_back(l);
  return e;
}

GovernanceRule residency_rule() {
  return GovernanceRule{"residency",
                        ViolationType::DataResidency,
                        {{"governance.classification", RuleOperator::Eq, std::string("PII")},
                         {"governance.jurisdiction", RuleOperator::Eq, std::string("EU")},
                         {"context.destination_jurisdiction", RuleOperator::Neq, std::string("EU")}},
                        Action::Deny,
                        0.95,
                        2};
}

GovernanceRule chain_rule(std::string origin = "EU") {
  return GovernanceRule{"chain",
                        ViolationType::DataResidency,
                        {{"lineage.any_jurisdiction_crossing", RuleOperator::ChainCrosses, std::move(origin)}},
                        Action::Deny,
                        0.95,
                        2};
}

}  // namespace

TEST_CASE("residency rule denies EU PII bound for the US") {
  auto e = hop("shipping_agent", "analytics_agent", {});
  e.context["destination_jurisdiction"] = std::string("US");
  const auto p = compile_rule(residency_rule());
  CHECK(p(e) == PolicyDecision{Action::Deny, 0.95});
  e.governance.classification = Classification::Public;
  CHECK(p(e) == PolicyDecision{Action::Allow, 1.0});
}

TEST_CASE("residency rule does not fire without a destination") {
  const auto e = hop("shipping_agent", "analytics_agent", {});
  CHECK(compile_rule(residency_rule())(e).action == Action::Allow);
}

TEST_CASE("bias threshold is a strict inequality") {
  const GovernanceRule r{"bias", ViolationType::BiasThreshold,
                         {{"context.disparate_impact", RuleOperator::Gt, 0.15}}, Action::Flag, 0.8, 1};
  const auto p = compile_rule(r);
  auto e = hop("payment_agent", "shipping_agent", {});
  e.context["disparate_impact"] = 0.16;
  CHECK(p(e) == PolicyDecision{Action::Flag, 0.8});
  e.context["disparate_impact"] = 0.15;
  CHECK(p(e) == PolicyDecision{Action::Allow, 1.0});
  e.context["disparate_impact"] = std::int64_t{1};
  CHECK(p(e).action == Action::Flag);
  e.context["disparate_impact"] = std::string("high");
  CHECK(p(e).action == Action::Allow);
}

TEST_CASE("lineage crossing: order -> shipping -> analytics") {
  const auto env = scenario_env();
  const auto e = hop("shipping_agent", "analytics_agent", {"order_agent", "shipping_agent"});
  CHECK(lineage_cross_check(e, "EU", *env) == Match::Yes);
  CHECK(lineage_cross_check(e, chain_rule(), *env) == Match::Yes);
}

TEST_CASE("lineage crossing: single EU hop cannot cross") {
  const auto env = scenario_env();
  const auto e = hop("order_agent", "inventory_agent", {"order_agent"});
  CHECK(lineage_cross_check(e, "EU", *env) == Match::No);
}

TEST_CASE("lineage crossing: full chain crosses, boundary view does not") {
  const auto env = scenario_env();
  auto e = hop("inventory_agent", "payment_agent", {"order_agent", "shipping_agent", "payment_agent", "inventory_agent"});
  CHECK(lineage_cross_check(e, "EU", *env) == Match::Yes);
  auto boundary = e;
  boundary.governance.lineage = {boundary.governance.lineage.back()};
  CHECK(lineage_cross_check(boundary, "EU", *env) == Match::No);
}

TEST_CASE("lineage crossing: origin filter, wildcard and unknown agents") {
  const auto env = scenario_env();
  const auto us_origin = hop("order_agent", "inventory_agent", {"shipping_agent", "order_agent"});
  CHECK(lineage_cross_check(us_origin, "EU", *env) == Match::No);
  CHECK(lineage_cross_check(us_origin, "*", *env) == Match::Yes);
  const auto unknown = hop("order_agent", "inventory_agent", {"ghost", "order_agent"});
  CHECK(lineage_cross_check(unknown, "EU", *env) == Match::Unknown);
  const auto unknown_mid = hop("shipping_agent", "analytics_agent", {"order_agent", "ghost", "shipping_agent"});
  CHECK(lineage_cross_check(unknown_mid, "EU", *env) == Match::Yes);
  auto dest = hop("order_agent", "inventory_agent", {"order_agent"});
  dest.context["destination_jurisdiction"] = std::string("US");
  CHECK(lineage_cross_check(dest, "EU", *env) == Match::Yes);
  CHECK(lineage_cross_check(dest, residency_rule(), *env) == Match::No);
}

TEST_CASE("unknown matches are treated conservatively") {
  const auto env = scenario_env();
  const GovernanceRule r{"auth", ViolationType::UnauthorizedAccess,
                         {{"operation.authorized", RuleOperator::Eq, std::string("false")}}, Action::Deny, 0.9, 2};
  const auto compiled = compile_rule_full(r, env);
  auto e = hop("order_agent", "inventory_agent", {});
  e.operation = "reserve_inventory";
  CHECK(compiled.matches(e) == Match::No);
  e.operation = "access_pii";
  CHECK(compiled.matches(e) == Match::Yes);
  e.source = AgentId("ghost");
  CHECK(compiled.matches(e) == Match::Unknown);
  CHECK(compiled.policy()(e) == PolicyDecision{Action::Deny, 0.9});
}

TEST_CASE("compile errors are reported") {
  auto bad = residency_rule();
  bad.conditions[0].field = "governance.colour";
  CHECK_THROWS_AS(validate_rule(bad), CompileError);
  bad = residency_rule();
  bad.conditions[0].op = RuleOperator::Gt;
  CHECK_THROWS_AS(validate_rule(bad), CompileError);
  bad = residency_rule();
  bad.conditions[0].value = std::string("SECRET");
  CHECK_THROWS_AS(validate_rule(bad), CompileError);
  bad = residency_rule();
  bad.conditions.clear();
  CHECK_THROWS_AS(validate_rule(bad), CompileError);
  bad = residency_rule();
  bad.confidence = 1.2;
  CHECK_THROWS_AS(validate_rule(bad), CompileError);
  bad = residency_rule();
  bad.base_level = 5;
  CHECK_THROWS_AS(validate_rule(bad), CompileError);
  bad = residency_rule();
  bad.id.clear();
  CHECK_THROWS_AS(validate_rule(bad), CompileError);
  bad = residency_rule();
  bad.conditions[0].op = RuleOperator::ChainCrosses;
  CHECK_THROWS_AS(validate_rule(bad), CompileError);
  CHECK_THROWS_AS((void)compile_rule(chain_rule(), nullptr), CompileError);
  CHECK(compile_rule_full(chain_rule(), std::make_shared<const RuleEnvironment>())
            .matches(hop("shipping_agent", "analytics_agent", {"order_agent"})) == Match::Unknown);
  CHECK_THROWS_AS((void)compile_rule(chain_rule("MARS"), scenario_env()), CompileError);
}

TEST_CASE("default pack covers every violation kind") {
  const RulePack pack = default_rule_pack();
  CHECK(pack.rules.size() == 25);
  for (std::size_t v = 0; v < enum_count<ViolationType>(); ++v) {
    CAPTURE(v);
    CHECK_NOTHROW((void)base_level_for(static_cast<ViolationType>(v), pack));
  }
  CHECK(base_level_for(ViolationType::DataResidency, pack) == 2);
  CHECK(base_level_for(ViolationType::ConsentMissing, pack) == 1);
  for (const auto& r : pack.rules) CHECK_NOTHROW(validate_rule(r));
  CHECK_THROWS_AS((void)base_level_for(ViolationType::BiasThreshold, RulePack{}), ConfigError);
}

TEST_CASE("default pack: capability rule denies operations outside E(source)") {
  const RulePack pack = default_rule_pack();
  const auto it = std::find_if(pack.rules.begin(), pack.rules.end(),
                               [](const GovernanceRule& r) { return r.id == "unauthorized.capability"; });
  REQUIRE(it != pack.rules.end());
  CHECK(it->action == Action::Deny);
  CHECK(it->confidence == 0.9);
  const auto p = compile_rule(*it, scenario_env());
  auto e = hop("order_agent", "inventory_agent", {});
  e.operation = "publish_report";
  CHECK(p(e) == PolicyDecision{Action::Deny, 0.9});
  e.operation = "request_payment";
  CHECK(p(e).action == Action::Allow);
}

TEST_CASE("rule pack file round-trips byte for byte") {
  const RulePack pack = default_rule_pack();
  const std::string once = serialize_rule_pack(pack);
  const RulePack back = parse_rule_pack(once);
  CHECK(back == pack);
  CHECK(serialize_rule_pack(back) == once);
  const auto path = std::filesystem::temp_directory_path() / "gaat_pack_roundtrip.json";
  save_rule_pack(path, pack);
  CHECK(load_rule_pack(path) == pack);
  std::filesystem::remove(path);
}

TEST_CASE("rule pack parser is strict") {
  CHECK_THROWS_AS((void)parse_rule_pack("not json"), ParseError);
  CHECK_THROWS_AS((void)parse_rule_pack(R"({"format":"gaat-rule-pack","version":9,"rules":[]})"), ParseError);
  std::string text = serialize_rule_pack(default_rule_pack());
  auto pos = text.find("\"base_level\"");
  text.insert(pos, "\"colour\": 1, ");
  CHECK_THROWS_AS((void)parse_rule_pack(text), ParseError);
  CHECK_THROWS_AS((void)load_rule_pack("/nonexistent/pack.json"), ConfigError);
}

TEST_CASE("property: random rule packs round-trip") {
  testgen::for_each_case(300, [](Rng& rng) {
    RulePack pack;
    const std::size_t n = 1 + rng.index(8);
    for (std::size_t i = 0; i < n; ++i) pack.rules.push_back(random_governance_rule(rng, "r" + std::to_string(i)));
    const std::string text = serialize_rule_pack(pack);
    const RulePack back = parse_rule_pack(text);
    REQUIRE(back == pack);
    REQUIRE(serialize_rule_pack(back) == text);
  });
}

TEST_CASE("property: compiled rules are pure") {
  const auto env = std::make_shared<const RuleEnvironment>(RuleEnvironment::from_system(t3_system()));
  testgen::for_each_case(2000, [&](Rng& rng) {
    const auto rule = random_governance_rule(rng, "r");
    const auto p = compile_rule(rule, env);
    const auto e = testgen::random_event(rng);
    const auto first = p(e);
    for (int k = 0; k < 3; ++k) REQUIRE(p(e) == first);
    REQUIRE((first == PolicyDecision{Action::Allow, 1.0} || first == PolicyDecision{rule.action, rule.confidence}));
  });
}
