#include "gaat/enforcement_bus.hpp"

#include <chrono>

#include <json.hpp>

#include "gaat/audit_record.hpp"
#include "gaat/canonical.hpp"

namespace gaat {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

GateResult gate_unverified(Verification verified, const RiskTier& tier) {
  if (verified == Verification::True) return GateResult::Proceed;
  return tier.fail_mode == FailMode::FailClosed ? GateResult::DenyUnverified : GateResult::PassWithAlert;
}

int action_floor(Action action) {
  switch (action) {
    case Action::Flag:
      return 2;
    case Action::Quarantine:
      return kMaxLevel;
    default:
      return 0;
  }
}

std::string alert_json_line(const Alert& alert) {
  nlohmann::json j;
  j["agent"] = alert.agent;
  j["detail"] = alert.detail;
  j["kind"] = alert.kind;
  j["time"] = alert.time;
  return j.dump() + "\n";
}

struct EnforcementBus::Pending {
  EnforcementOutcome out;
  Clock::time_point t0;
  bool fail_open_pass = false;
  bool policy_ran = false;
};

EnforcementBus::EnforcementBus(BusConfig config, MultiAgentSystem system, const RulePack& pack, KeyRegistry keys,
                               MerkleAuditLog audit)
    : config_(std::move(config)),
      system_(std::move(system)),
      pack_(pack),
      env_(std::make_shared<RuleEnvironment>(RuleEnvironment::from_system(system_))),
      compiled_(compile_rule_pack(pack, env_)),
      keys_(std::move(keys)),
      audit_(std::move(audit)),
      replay_(config_.replay),
      engine_(config_.escalation, system_) {
  if (!system_.contains(config_.compliance_sink)) {
    throw ConfigError("compliance sink '" + config_.compliance_sink.str() + "' is not a registered agent");
  }
  policies_ = compiled_.policies;
  policies_.insert(policies_.end(), config_.extra_policies.begin(), config_.extra_policies.end());
}

void EnforcementBus::alert(double time, const AgentId& agent, std::string kind, std::string detail) {
  alerts_.push_back(Alert{time, agent.str(), std::move(kind), std::move(detail)});
}

bool EnforcementBus::lineage_resolvable(const GovernanceTelemetryEvent& event) const {
  for (const auto& a : event.governance.lineage) {
    if (!system_.contains(a)) return false;
  }
  return true;
}

EnforcementOutcome EnforcementBus::process_event(const GovernanceTelemetryEvent& event) {
  return process_event(event, event.timestamp);
}

EnforcementOutcome EnforcementBus::process_event(const GovernanceTelemetryEvent& event, double now) {
  std::lock_guard lock(mutex_);
  return run_pipeline(event, now);
}

EnforcementOutcome EnforcementBus::run_pipeline(const GovernanceTelemetryEvent& event, double now) {
  Pending p;
  p.t0 = Clock::now();
  ++counters_.processed;
  auto& out = p.out;
  out.event_digest = event_digest(event);

  out.verification = verify_event(event, keys_);
  if (out.verification == Verification::True) ++counters_.verified_true;
  GovernanceTelemetryEvent ev = event;
  ev.governance.verified = out.verification;
  out.tier = derive_risk_tier(ev, config_.tiers).tier;
  const RiskTier tier{out.tier, config_.tiers.fail_mode(out.tier)};

  if (replay_.check(ev.nonce, ev.source, now) == ReplayVerdict::Replay) {
    ++counters_.replay_rejected;
    out.reason = OutcomeReason::ReplayRejected;
    alert(now, ev.source, "REPLAY_REJECTED", "nonce " + std::to_string(ev.nonce) + " seen within the window");
    finish(p, ev, now);
    return out;
  }

  const bool source_quarantined = engine_.knows(ev.source) && engine_.state(ev.source).quarantined;
  const bool receiver_quarantined = engine_.knows(ev.receiver) && engine_.state(ev.receiver).quarantined;
  if (source_quarantined || receiver_quarantined) {
    out.reason = OutcomeReason::Quarantined;
    if (source_quarantined) out.applied_level = EnforcementLevel::L4Quarantine;
    finish(p, ev, now);
    return out;
  }

  switch (gate_unverified(out.verification, tier)) {
    case GateResult::DenyUnverified:
      ++counters_.gated;
      out.reason = OutcomeReason::FailClosedUnverified;
      alert(now, ev.source, "FAIL_CLOSED_UNVERIFIED",
            "verification " + std::string(to_string(out.verification)) + " on " + std::string(to_string(out.tier)) +
                " tier");
      finish(p, ev, now);
      return out;
    case GateResult::PassWithAlert:
      ++counters_.gated;
      p.fail_open_pass = true;
      alert(now, ev.source, "FAIL_OPEN_PASS",
            "verification " + std::string(to_string(out.verification)) + " passed on " +
                std::string(to_string(out.tier)) + " tier");
      break;
    case GateResult::Proceed:
      break;
  }

  if (!lineage_resolvable(ev)) {
    if (tier.fail_mode == FailMode::FailClosed) {
      out.reason = OutcomeReason::LineageUnresolved;
      alert(now, ev.source, "LINEAGE_UNRESOLVED", "lineage names an unregistered agent");
      finish(p, ev, now);
      return out;
    }
    alert(now, ev.source, "LINEAGE_UNRESOLVED", "unregistered lineage agent passed on fail-open tier");
  }

  try {
    evaluate_and_enforce(p, ev, now);
  } catch (const std::exception& e) {
    ++counters_.stage_failures;
    out = EnforcementOutcome{};
    out.event_digest = event_digest(event);
    out.verification = ev.governance.verified;
    out.tier = tier.tier;
    out.reason = OutcomeReason::StageFailure;
    if (tier.fail_mode == FailMode::FailOpen) {
      out.operation_completed = true;
      out.delivered_to = ev.receiver;
      out.applied_level = EnforcementLevel::L1Alert;
    }
    alert(now, ev.source, "STAGE_FAILURE", e.what());
  }
  finish(p, ev, now);
  return out;
}

void EnforcementBus::evaluate_and_enforce(Pending& p, const GovernanceTelemetryEvent& ev, double now) {
  auto& out = p.out;
  const bool known = engine_.knows(ev.source);
  if (known) engine_.prune(ev.source, now);

  GovernanceTelemetryEvent view = ev;
  if (config_.mode == EnforcementMode::BoundaryOnly && view.governance.lineage.size() > 1) {
    view.governance.lineage.erase(view.governance.lineage.begin(), view.governance.lineage.end() - 1);
  }
  const PolicySetResult result = evaluate_policy_set_detailed(policies_, view);
  ++counters_.policy_evaluations;
  p.policy_ran = true;
  out.decided_action = result.decision;
  out.latency_detection_ms = ms_since(p.t0);

  const GovernanceRule* lead = nullptr;
  for (std::size_t idx : result.triggered) {
    if (idx < compiled_.rules.size()) {
      const auto& r = compiled_.rules[idx].rule();
      out.matched_rules.push_back(r.id);
      if (lead == nullptr || severity(r.action) > severity(lead->action) ||
          (r.action == lead->action && r.base_level > lead->base_level)) {
        lead = &r;
      }
    } else {
      out.matched_rules.push_back(policies_[idx].id());
    }
  }
  if (lead != nullptr) out.violation = lead->violation;

  const Action action = result.decision.action;
  if (action == Action::Allow || config_.mode == EnforcementMode::ObserveOnly) {
    out.reason = p.fail_open_pass && action == Action::Allow ? OutcomeReason::FailOpenPass : OutcomeReason::Policy;
    out.operation_completed = true;
    out.delivered_to = ev.receiver;
    if (action != Action::Allow) {
      alert(now, ev.source, "OBSERVED", "decision " + std::string(to_string(action)) + " not enforced");
    }
    return;
  }

  out.reason = OutcomeReason::Policy;
  int applied = action_floor(action);
  if (known) {
    ViolationRecord rec{out.event_digest, lead ? lead->id : out.matched_rules.front(), result.decision, now};
    const auto step = engine_.record_violation(ev.source, std::move(rec), lead ? lead->base_level : 0);
    out.graduated_level = step.graduated_level;
    applied = std::max(applied, step.graduated_level);
    if (step.breaker_tripped) {
      applied = kMaxLevel;
      out.reason = OutcomeReason::CircuitBreaker;
      alert(now, ev.source, "CIRCUIT_BREAKER", "violation rate exceeded the breaker threshold");
    }
  } else {
    applied = std::max(applied, lead ? lead->base_level : 0);
  }
  out.applied_level = static_cast<EnforcementLevel>(applied);

  const bool deny = action == Action::Deny;
  if (applied >= kMaxLevel) {
    if (known) {
      engine_.quarantine(ev.source);
      system_.set_capabilities(ev.source, {});
    }
    alert(now, ev.source, "QUARANTINE", "agent quarantined");
    out.operation_completed = false;
    return;
  }
  if (known) engine_.set_level(ev.source, applied);
  if (applied == 3 && !deny) {
    out.redirected = true;
    out.operation_completed = true;
    out.delivered_to = config_.compliance_sink;
    return;
  }
  if (applied >= 2) out.flagged = true;
  if (applied == 1) alert(now, ev.source, "ALERT", "level 1 on " + out.matched_rules.front());
  if (deny) {
    out.operation_completed = false;
    return;
  }
  out.operation_completed = true;
  out.delivered_to = ev.receiver;
}

void EnforcementBus::finish(Pending& p, const GovernanceTelemetryEvent& ev, double now) {
  auto& out = p.out;
  if (!p.policy_ran) out.latency_detection_ms = ms_since(p.t0);

  AuditRecord rec;
  rec.kind = "ENFORCEMENT";
  rec.time = now;
  rec.event_digest = out.event_digest;
  rec.agent = ev.source.str();
  rec.receiver = out.delivered_to ? out.delivered_to->str() : ev.receiver.str();
  rec.operation = ev.operation;
  rec.verification = std::string(to_string(out.verification));
  rec.tier = std::string(to_string(out.tier));
  if (out.decided_action) {
    rec.action = std::string(to_string(out.decided_action->action));
    rec.confidence = out.decided_action->confidence;
  }
  rec.applied_level = static_cast<int>(out.applied_level);
  rec.reason = std::string(to_string(out.reason));
  rec.operation_completed = out.operation_completed;
  rec.redirected = out.redirected;
  rec.matched_rules = out.matched_rules;
  if (out.flagged) rec.detail = "governance_flag";
  const Bytes encoded = encode_audit_record(rec);
  Bytes sig;
  if (config_.audit_signer) sig = config_.audit_signer->sign(encoded);
  audit_.append(encoded, sig);
  ++counters_.audits;

  const bool observe = config_.mode == EnforcementMode::ObserveOnly;
  if (p.policy_ran && !observe && engine_.knows(ev.source)) {
    const double t = engine_.apply_trust(ev.source, static_cast<int>(out.applied_level));
    system_.set_trust(ev.source, t);
  }
  out.latency_e2e_ms = ms_since(p.t0);
}

ResetResult EnforcementBus::reset_agent(const AgentId& agent, std::string_view operator_token, double now) {
  std::lock_guard lock(mutex_);
  ResetResult r = engine_.reset(agent, operator_token, now, audit_);
  if (r.performed) {
    system_.set_capabilities(agent, r.state.capabilities);
  } else {
    alert(now, agent, "RESET_IGNORED", r.warning);
  }
  return r;
}

}  // namespace gaat
