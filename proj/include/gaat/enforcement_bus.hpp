#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "gaat/audit_log.hpp"
#include "gaat/core_model.hpp"
#include "gaat/escalation_engine.hpp"
#include "gaat/policy_rules.hpp"
#include "gaat/replay_filter.hpp"
#include "gaat/trusted_plane.hpp"

namespace gaat {

enum class EnforcementLevel : std::uint8_t { L0Allow = 0, L1Alert = 1, L2Flag = 2, L3Redirect = 3, L4Quarantine = 4 };
GAAT_ENUM_NAMES(EnforcementLevel, std::string_view{"L0_ALLOW"}, std::string_view{"L1_ALERT"},
                std::string_view{"L2_FLAG"}, std::string_view{"L3_REDIRECT"}, std::string_view{"L4_QUARANTINE"})

enum class OutcomeReason : std::uint8_t {
  Policy,
  CircuitBreaker,
  FailClosedUnverified,
  FailOpenPass,
  ReplayRejected,
  Quarantined,
  LineageUnresolved,
  StageFailure,
};
GAAT_ENUM_NAMES(OutcomeReason, std::string_view{"POLICY"}, std::string_view{"CIRCUIT_BREAKER"},
                std::string_view{"FAIL_CLOSED_UNVERIFIED"}, std::string_view{"FAIL_OPEN_PASS"},
                std::string_view{"REPLAY_REJECTED"}, std::string_view{"QUARANTINED"},
                std::string_view{"LINEAGE_UNRESOLVED"}, std::string_view{"STAGE_FAILURE"})

enum class GateResult : std::uint8_t { Proceed, DenyUnverified, PassWithAlert };
GAAT_ENUM_NAMES(GateResult, std::string_view{"PROCEED"}, std::string_view{"DENY_UNVERIFIED"},
                std::string_view{"PASS_WITH_ALERT"})

enum class EnforcementMode : std::uint8_t { Full, BoundaryOnly, ObserveOnly };
GAAT_ENUM_NAMES(EnforcementMode, std::string_view{"FULL"}, std::string_view{"BOUNDARY_ONLY"},
                std::string_view{"OBSERVE_ONLY"})

[[nodiscard]] GateResult gate_unverified(Verification verified, const RiskTier& tier);

/// Minimum level implied by a policy action: FLAG -> 2, QUARANTINE -> 4, else 0.
[[nodiscard]] int action_floor(Action action);

struct EnforcementOutcome {
  Digest event_digest{};
  /// Absent when the policy set was never evaluated.
  std::optional<PolicyDecision> decided_action;
  EnforcementLevel applied_level = EnforcementLevel::L0Allow;
  int graduated_level = 0;
  bool operation_completed = false;
  bool redirected = false;
  bool flagged = false;
  OutcomeReason reason = OutcomeReason::Policy;
  Verification verification = Verification::Unknown;
  Tier tier = Tier::Low;
  std::optional<ViolationType> violation;
  std::vector<std::string> matched_rules;
  /// Receiver the operation completed against (the sink on redirect).
  std::optional<AgentId> delivered_to;
  double latency_detection_ms = 0.0;
  double latency_e2e_ms = 0.0;
};

struct Alert {
  double time = 0.0;
  std::string agent;
  std::string kind;
  std::string detail;
  bool operator==(const Alert&) const = default;
};

/// One JSON object per line, keys sorted.
[[nodiscard]] std::string alert_json_line(const Alert& alert);

struct StageCounters {
  std::uint64_t processed = 0;
  std::uint64_t verified_true = 0;
  std::uint64_t replay_rejected = 0;
  std::uint64_t gated = 0;
  std::uint64_t policy_evaluations = 0;
  std::uint64_t audits = 0;
  std::uint64_t stage_failures = 0;
};

struct BusConfig {
  EscalationConfig escalation;
  TierConfig tiers = TierConfig::defaults();
  ReplayFilterConfig replay;
  EnforcementMode mode = EnforcementMode::Full;
  AgentId compliance_sink;
  /// Evaluated after the compiled pack, e.g. site-specific or test policies.
  std::vector<Policy> extra_policies;
  /// Signs audit records when set.
  std::shared_ptr<const Signer> audit_signer;
};

/// The enforcement pipeline. process_event is serialized internally; audit
/// appends therefore serialize as well.
class EnforcementBus {
 public:
  /// Throws ConfigError when the compliance sink is not a registered agent or
  /// the escalation config is invalid.
  EnforcementBus(BusConfig config, MultiAgentSystem system, const RulePack& pack, KeyRegistry keys,
                 MerkleAuditLog audit);

  /// `now` is the arrival time at the bus (defaults to the event timestamp).
  EnforcementOutcome process_event(const GovernanceTelemetryEvent& event);
  EnforcementOutcome process_event(const GovernanceTelemetryEvent& event, double now);

  /// Operator reset of a quarantined agent; restores capabilities in the system.
  ResetResult reset_agent(const AgentId& agent, std::string_view operator_token, double now);

  [[nodiscard]] const BusConfig& config() const noexcept { return config_; }
  [[nodiscard]] const MultiAgentSystem& system() const noexcept { return system_; }
  [[nodiscard]] const EscalationEngine& escalation() const noexcept { return engine_; }
  [[nodiscard]] EscalationEngine& escalation() noexcept { return engine_; }
  [[nodiscard]] const MerkleAuditLog& audit() const noexcept { return audit_; }
  [[nodiscard]] MerkleAuditLog& audit() noexcept { return audit_; }
  [[nodiscard]] KeyRegistry& keys() noexcept { return keys_; }
  [[nodiscard]] const std::vector<Alert>& alerts() const noexcept { return alerts_; }
  [[nodiscard]] const StageCounters& counters() const noexcept { return counters_; }
  [[nodiscard]] const RulePack& pack() const noexcept { return pack_; }

 private:
  struct Pending;
  EnforcementOutcome run_pipeline(const GovernanceTelemetryEvent& event, double now);
  void evaluate_and_enforce(Pending& p, const GovernanceTelemetryEvent& event, double now);
  void finish(Pending& p, const GovernanceTelemetryEvent& event, double now);
  void alert(double time, const AgentId& agent, std::string kind, std::string detail);
  [[nodiscard]] bool lineage_resolvable(const GovernanceTelemetryEvent& event) const;

  BusConfig config_;
  MultiAgentSystem system_;
  RulePack pack_;
  std::shared_ptr<const RuleEnvironment> env_;
  CompiledRulePack compiled_;
  std::vector<Policy> policies_;
  KeyRegistry keys_;
  MerkleAuditLog audit_;
  ReplayFilter replay_;
  EscalationEngine engine_;
  std::vector<Alert> alerts_;
  StageCounters counters_;
  std::mutex mutex_;
};

}  // namespace gaat
