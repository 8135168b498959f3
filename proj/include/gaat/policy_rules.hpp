#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "gaat/core_model.hpp"
#include "gaat/policy_algebra.hpp"

namespace gaat {

enum class RuleOperator : std::uint8_t { Eq, Neq, Gt, Lt, In, Contains, ChainCrosses };
GAAT_ENUM_NAMES(RuleOperator, std::string_view{"EQ"}, std::string_view{"NEQ"}, std::string_view{"GT"},
                std::string_view{"LT"}, std::string_view{"IN"}, std::string_view{"CONTAINS"},
                std::string_view{"CHAIN_CROSSES"})

using RuleValue = std::variant<std::string, double, std::vector<std::string>>;

struct RuleCondition {
  std::string field;
  RuleOperator op = RuleOperator::Eq;
  RuleValue value;
  bool operator==(const RuleCondition&) const = default;
};

struct GovernanceRule {
  std::string id;
  ViolationType violation = ViolationType::UnauthorizedAccess;
  std::vector<RuleCondition> conditions;  ///< conjunctive
  Action action = Action::Deny;
  double confidence = 1.0;
  int base_level = 0;
  bool operator==(const GovernanceRule&) const = default;
};

struct RulePack {
  std::vector<GovernanceRule> rules;
  bool operator==(const RulePack&) const = default;
};

/// Static facts rules may consult: the baseline authorization table E and the
/// hosting jurisdiction of every registered agent.
struct RuleEnvironment {
  std::map<AgentId, std::set<Capability>> authorized;
  std::map<AgentId, Jurisdiction> hosting;

  static RuleEnvironment from_system(const MultiAgentSystem& system);
};

enum class Match : std::uint8_t { Yes, No, Unknown };

/// CHAIN_CROSSES evaluation. Origin is the hosting jurisdiction of lineage[0];
/// the chain is the remaining lineage, the source, and
/// context.destination_jurisdiction when present. `origin` is a jurisdiction
/// name or "*" for any origin. Unregistered agents give Unknown unless a
/// definite crossing is found elsewhere on the chain.
[[nodiscard]] Match lineage_cross_check(const GovernanceTelemetryEvent& event, std::string_view origin,
                                        const RuleEnvironment& env);

/// Uses the rule's CHAIN_CROSSES condition; a rule without one never matches.
[[nodiscard]] Match lineage_cross_check(const GovernanceTelemetryEvent& event, const GovernanceRule& rule,
                                        const RuleEnvironment& env);

/// Validates the rule and type-checks every condition. Throws CompileError.
void validate_rule(const GovernanceRule& rule);

class CompiledRule {
 public:
  CompiledRule(GovernanceRule rule, std::shared_ptr<const RuleEnvironment> env);

  [[nodiscard]] const GovernanceRule& rule() const noexcept { return rule_; }
  /// Conjunction over conditions; any No wins, then any Unknown.
  [[nodiscard]] Match matches(const GovernanceTelemetryEvent& event) const;
  /// Match (and Unknown, conservatively) -> (action, confidence); else (ALLOW, 1.0).
  [[nodiscard]] Policy policy() const;

 private:
  using Predicate = std::function<Match(const GovernanceTelemetryEvent&)>;
  GovernanceRule rule_;
  std::shared_ptr<const RuleEnvironment> env_;
  std::vector<Predicate> predicates_;
};

[[nodiscard]] CompiledRule compile_rule_full(const GovernanceRule& rule, std::shared_ptr<const RuleEnvironment> env);
[[nodiscard]] Policy compile_rule(const GovernanceRule& rule, std::shared_ptr<const RuleEnvironment> env);
/// Convenience for rules that do not consult the environment.
[[nodiscard]] Policy compile_rule(const GovernanceRule& rule);

struct CompiledRulePack {
  std::vector<CompiledRule> rules;
  std::vector<Policy> policies;  ///< one per rule, same order
};
[[nodiscard]] CompiledRulePack compile_rule_pack(const RulePack& pack, std::shared_ptr<const RuleEnvironment> env);

/// Highest base level over the pack's non-ALLOW rules of that kind.
/// Throws ConfigError if the pack has no such rule.
[[nodiscard]] int base_level_for(ViolationType violation, const RulePack& pack);

[[nodiscard]] RulePack default_rule_pack();

// Rule pack file format (JSON, strict). See docs/rule_pack.md.
[[nodiscard]] RulePack parse_rule_pack(std::string_view text);
[[nodiscard]] std::string serialize_rule_pack(const RulePack& pack);
[[nodiscard]] RulePack load_rule_pack(const std::filesystem::path& path);
void save_rule_pack(const std::filesystem::path& path, const RulePack& pack);

}  // namespace gaat
