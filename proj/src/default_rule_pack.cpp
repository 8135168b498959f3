#include "gaat/policy_rules.hpp"

namespace gaat {

namespace {

RuleCondition eq(std::string field, std::string value) {
  return RuleCondition{std::move(field), RuleOperator::Eq, std::move(value)};
}
RuleCondition eq(std::string field, double value) { return RuleCondition{std::move(field), RuleOperator::Eq, value}; }
RuleCondition neq(std::string field, std::string value) {
  return RuleCondition{std::move(field), RuleOperator::Neq, std::move(value)};
}
RuleCondition gt(std::string field, double value) { return RuleCondition{std::move(field), RuleOperator::Gt, value}; }
RuleCondition lt(std::string field, double value) { return RuleCondition{std::move(field), RuleOperator::Lt, value}; }
RuleCondition in(std::string field, std::vector<std::string> values) {
  return RuleCondition{std::move(field), RuleOperator::In, std::move(values)};
}

const RuleCondition kPii = eq("governance.classification", "PII");
const RuleCondition kEu = eq("governance.jurisdiction", "EU");

GovernanceRule rule(std::string id, ViolationType v, std::vector<RuleCondition> conds, Action a, double c, int base) {
  return GovernanceRule{std::move(id), v, std::move(conds), a, c, base};
}

}  // namespace

// Documented in docs/rule_pack.md; keep the two in sync.
RulePack default_rule_pack() {
  using V = ViolationType;
  using A = Action;
  RulePack p;
  auto& r = p.rules;

  r.push_back(rule("residency.eu_pii_export", V::DataResidency,
                   {kPii, kEu, neq("context.destination_jurisdiction", "EU")}, A::Deny, 0.95, 2));
  r.push_back(rule("residency.eu_pii_chain", V::DataResidency,
                   {kPii, RuleCondition{"lineage.any_jurisdiction_crossing", RuleOperator::ChainCrosses, "EU"}},
                   A::Deny, 0.95, 2));
  r.push_back(rule("residency.eu_pii_storage_region", V::DataResidency, {kPii, kEu, neq("context.storage_region", "EU")},
                   A::Deny, 0.9, 2));
  r.push_back(rule("residency.eu_pii_backup_region", V::DataResidency, {kPii, kEu, neq("context.backup_region", "EU")},
                   A::Deny, 0.9, 2));
  r.push_back(rule("residency.eu_sensitive_export", V::DataResidency,
                   {eq("governance.sensitivity", "HIGH"), kEu, neq("context.destination_jurisdiction", "EU")}, A::Deny,
                   0.9, 2));
  r.push_back(rule("residency.eu_pii_to_external", V::DataResidency,
                   {kPii, in("receiver", {"ad_network", "external_partner"})}, A::Deny, 0.95, 2));

  r.push_back(rule("consent.flag_missing", V::ConsentMissing, {eq("context.consent_flag", 0.0)}, A::Deny, 0.9, 1));
  r.push_back(rule("consent.revoked", V::ConsentMissing, {eq("context.consent_status", "revoked")}, A::Deny, 0.9, 1));
  r.push_back(rule("consent.stale", V::ConsentMissing, {gt("context.consent_age_days", 365.0)}, A::Deny, 0.85, 1));
  r.push_back(rule("consent.marketing_optout", V::ConsentMissing,
                   {eq("operation", "send_marketing"), eq("context.marketing_optin", 0.0)}, A::Deny, 0.9, 1));
  r.push_back(rule("consent.minor_without_guardian", V::ConsentMissing,
                   {lt("context.subject_age", 16.0), eq("context.guardian_consent", 0.0)}, A::Deny, 0.9, 1));
  r.push_back(rule("consent.profiling_purpose", V::ConsentMissing,
                   {kPii, eq("context.processing_purpose", "profiling")}, A::Deny, 0.85, 1));

  r.push_back(rule("bias.disparate_impact", V::BiasThreshold, {gt("context.disparate_impact", 0.15)}, A::Deny, 0.8, 1));
  r.push_back(rule("bias.approval_rate_gap", V::BiasThreshold, {gt("context.approval_rate_gap", 0.2)}, A::Deny, 0.8, 1));
  r.push_back(rule("bias.score_shift", V::BiasThreshold, {gt("context.score_shift", 0.25)}, A::Deny, 0.75, 1));
  r.push_back(rule("bias.protected_attribute_use", V::BiasThreshold, {eq("context.uses_protected_attribute", 1.0)},
                   A::Deny, 0.85, 1));

  r.push_back(rule("unauthorized.capability", V::UnauthorizedAccess, {eq("operation.authorized", "false")}, A::Deny,
                   0.9, 2));
  r.push_back(rule("unauthorized.bulk_export", V::UnauthorizedAccess,
                   {in("operation", {"dump_table", "export_customer_db"})}, A::Quarantine, 0.85, 2));
  r.push_back(rule("unauthorized.privilege_grant", V::UnauthorizedAccess, {eq("operation", "grant_capability")},
                   A::Quarantine, 0.9, 2));
  r.push_back(rule("unauthorized.revoked_token", V::UnauthorizedAccess, {eq("context.token_state", "revoked")},
                   A::Deny, 0.9, 2));
  r.push_back(rule("unauthorized.refund_outside_payment", V::UnauthorizedAccess,
                   {eq("operation", "issue_refund"), neq("source", "payment_agent")}, A::Deny, 0.9, 2));
  r.push_back(rule("unauthorized.unverified_privileged", V::UnauthorizedAccess,
                   {eq("governance.verified", "FALSE"), in("operation", {"grant_capability", "issue_refund"})},
                   A::Quarantine, 0.9, 2));

  r.push_back(rule("allow.heartbeat", V::UnauthorizedAccess, {eq("operation", "heartbeat")}, A::Allow, 1.0, 0));
  r.push_back(rule("allow.public_metrics", V::UnauthorizedAccess,
                   {eq("governance.classification", "PUBLIC"), eq("operation", "emit_metrics")}, A::Allow, 1.0, 0));
  r.push_back(rule("allow.compliance_archive", V::UnauthorizedAccess,
                   {eq("receiver", "compliance_sink"), eq("operation", "archive_record")}, A::Allow, 1.0, 0));
  return p;
}

}  // namespace gaat
