#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "gaat/audit_log.hpp"
#include "gaat/core_model.hpp"
#include "gaat/crypto.hpp"
#include "gaat/policy_algebra.hpp"
#include "gaat/policy_rules.hpp"

namespace gaat {

inline constexpr int kMaxLevel = 4;

struct EscalationConfig {
  double window_w = 45.0;   ///< W, seconds
  int k = 3;                ///< violations per level step
  int cb_threshold = 9;     ///< k_cb
  double cb_window = 11.25; ///< W_cb, seconds
  bool breaker_enabled = true;

  /// k_cb = 3k and W_cb = W/4.
  static EscalationConfig with_defaults(double window_w, int k);
  /// Throws ConfigError.
  void validate() const;
};

struct ViolationRecord {
  Digest event_ref{};
  std::string policy_id;
  PolicyDecision decision;
  double time = 0.0;
};

class AgentEscalationState;
AgentEscalationState update_trust(AgentEscalationState state, int applied_level);

class AgentEscalationState {
 public:
  AgentEscalationState() = default;
  AgentEscalationState(AgentId agent, std::set<Capability> capabilities, double trust = 1.0);

  AgentId agent;
  std::vector<ViolationRecord> history;  ///< time ordered
  int current_level = 0;
  bool circuit_broken = false;
  /// Level 4 reached (by escalation, action or breaker); absorbing until reset.
  bool quarantined = false;
  std::set<Capability> capabilities;

  [[nodiscard]] double trust() const noexcept { return trust_; }
  /// Number of times update_trust has written this state's trust.
  [[nodiscard]] std::uint64_t trust_writes() const noexcept { return trust_writes_; }

  /// Rebuilds a persisted snapshot.
  static AgentEscalationState restore(AgentId agent, std::vector<ViolationRecord> history, int level, bool broken,
                                      bool quarantined, double trust, std::set<Capability> capabilities);

 private:
  friend AgentEscalationState update_trust(AgentEscalationState state, int applied_level);
  double trust_ = 1.0;
  std::uint64_t trust_writes_ = 0;
};

/// Keeps records with time in [now - W, now].
[[nodiscard]] AgentEscalationState prune_history(AgentEscalationState state, double now, const EscalationConfig& config);

/// min(4, base + floor(history_size / k)).
[[nodiscard]] int compute_level(int base_level, std::size_t history_size, int k);
/// base(v) from the pack; throws ConfigError when the pack has no rule for v.
[[nodiscard]] int compute_level(ViolationType violation, const AgentEscalationState& state,
                                const EscalationConfig& config, const RulePack& rules);
/// floor(|H| / k) capped at 4; used when no violation is active (after reset).
[[nodiscard]] int level_from_history(const AgentEscalationState& state, const EscalationConfig& config);

/// True iff more than k_cb records fall in [now - W_cb, now]; then forces
/// circuit_broken, level 4 and an empty capability set.
bool check_circuit_breaker(AgentEscalationState& state, double now, const EscalationConfig& config);

/// T * (1 - 0.1 * level) for level >= 1, min(1, T + 0.01) at level 0.
[[nodiscard]] double trust_after(double trust, int applied_level);

struct ResetResult {
  AgentEscalationState state;
  bool performed = false;
  std::string warning;
};

/// Operator reset of a quarantined agent. Appends exactly one BREAKER_RESET
/// audit record when performed. A state that is not quarantined is returned
/// unchanged with a warning.
[[nodiscard]] ResetResult reset_circuit_breaker(AgentEscalationState state, std::string_view operator_token, double now,
                                                const EscalationConfig& config,
                                                const std::set<Capability>& baseline_capabilities,
                                                MerkleAuditLog& audit);

/// Per-agent escalation bookkeeping owned by the enforcement bus.
class EscalationEngine {
 public:
  EscalationEngine(EscalationConfig config, const MultiAgentSystem& baseline);

  struct Step {
    int graduated_level = 0;
    std::size_t history_before = 0;
    bool breaker_tripped = false;
  };

  [[nodiscard]] const EscalationConfig& config() const noexcept { return config_; }
  [[nodiscard]] bool knows(const AgentId& agent) const { return states_.count(agent) != 0; }
  [[nodiscard]] const AgentEscalationState& state(const AgentId& agent) const;
  [[nodiscard]] const std::set<Capability>& baseline(const AgentId& agent) const;
  [[nodiscard]] std::vector<AgentId> agents() const;

  void prune(const AgentId& agent, double now);
  /// Level uses |H| before the new record is added; the breaker sees it after.
  Step record_violation(const AgentId& agent, ViolationRecord record, int base_level);
  void quarantine(const AgentId& agent);
  void set_level(const AgentId& agent, int level);
  double apply_trust(const AgentId& agent, int applied_level);
  ResetResult reset(const AgentId& agent, std::string_view operator_token, double now, MerkleAuditLog& audit);
  void replace_state(const AgentId& agent, AgentEscalationState state);

 private:
  AgentEscalationState& mut(const AgentId& agent);

  EscalationConfig config_;
  std::map<AgentId, AgentEscalationState> states_;
  std::map<AgentId, std::set<Capability>> baseline_;
};

}  // namespace gaat
