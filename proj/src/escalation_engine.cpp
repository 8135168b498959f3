#include "gaat/escalation_engine.hpp"

#include <algorithm>
#include <cmath>

#include "gaat/audit_record.hpp"

namespace gaat {

EscalationConfig EscalationConfig::with_defaults(double window_w, int k) {
  EscalationConfig c;
  c.window_w = window_w;
  c.k = k;
  c.cb_threshold = 3 * k;
  c.cb_window = window_w / 4.0;
  return c;
}

void EscalationConfig::validate() const {
  if (!(window_w > 0.0) || !std::isfinite(window_w)) throw ConfigError("escalation window W must be > 0");
  if (k < 1) throw ConfigError("escalation k must be >= 1");
  if (cb_threshold < 1) throw ConfigError("circuit breaker threshold must be >= 1");
  if (!(cb_window > 0.0) || cb_window > window_w) throw ConfigError("circuit breaker window must lie in (0, W]");
}

AgentEscalationState::AgentEscalationState(AgentId agent_id, std::set<Capability> caps, double trust)
    : agent(std::move(agent_id)), capabilities(std::move(caps)), trust_(std::clamp(trust, 0.0, 1.0)) {}

AgentEscalationState AgentEscalationState::restore(AgentId agent, std::vector<ViolationRecord> history, int level,
                                                   bool broken, bool quarantined, double trust,
                                                   std::set<Capability> capabilities) {
  if (level < 0 || level > kMaxLevel) throw ConfigError("persisted level outside 0..4");
  if (broken && (level != kMaxLevel || !capabilities.empty())) {
    throw ConfigError("persisted state violates circuit_broken => level 4 and no capabilities");
  }
  AgentEscalationState s(std::move(agent), std::move(capabilities), trust);
  s.history = std::move(history);
  s.current_level = level;
  s.circuit_broken = broken;
  s.quarantined = quarantined || broken;
  return s;
}

AgentEscalationState prune_history(AgentEscalationState state, double now, const EscalationConfig& config) {
  const double lo = now - config.window_w;
  auto& h = state.history;
  h.erase(std::remove_if(h.begin(), h.end(), [&](const ViolationRecord& r) { return r.time < lo || r.time > now; }),
          h.end());
  return state;
}

int compute_level(int base_level, std::size_t history_size, int k) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (base_level < 0 || base_level > kMaxLevel) throw ConfigError("base level outside 0..4");
  const std::size_t steps = history_size / static_cast<std::size_t>(k);
  return static_cast<int>(std::min<std::size_t>(kMaxLevel, static_cast<std::size_t>(base_level) + steps));
}

int compute_level(ViolationType violation, const AgentEscalationState& state, const EscalationConfig& config,
                  const RulePack& rules) {
  return compute_level(base_level_for(violation, rules), state.history.size(), config.k);
}

int level_from_history(const AgentEscalationState& state, const EscalationConfig& config) {
  return compute_level(0, state.history.size(), config.k);
}

bool check_circuit_breaker(AgentEscalationState& state, double now, const EscalationConfig& config) {
  const double lo = now - config.cb_window;
  const auto count = std::count_if(state.history.begin(), state.history.end(),
                                   [&](const ViolationRecord& r) { return r.time >= lo && r.time <= now; });
  if (count <= config.cb_threshold) return false;
  state.circuit_broken = true;
  state.quarantined = true;
  state.current_level = kMaxLevel;
  state.capabilities.clear();
  return true;
}

double trust_after(double trust, int applied_level) {
  if (applied_level < 0 || applied_level > kMaxLevel) throw ConfigError("applied level outside 0..4");
  if (applied_level == 0) return std::min(1.0, trust + 0.01);
  return std::clamp(trust * (1.0 - 0.1 * applied_level), 0.0, 1.0);
}

AgentEscalationState update_trust(AgentEscalationState state, int applied_level) {
  state.trust_ = trust_after(state.trust_, applied_level);
  ++state.trust_writes_;
  return state;
}

ResetResult reset_circuit_breaker(AgentEscalationState state, std::string_view operator_token, double now,
                                  const EscalationConfig& config, const std::set<Capability>& baseline_capabilities,
                                  MerkleAuditLog& audit) {
  if (operator_token.empty()) throw ConfigError("operator token must be non-empty");
  if (!state.quarantined && !state.circuit_broken) {
    std::string warning = "agent '" + state.agent.str() + "' is not quarantined; reset ignored";
    return ResetResult{std::move(state), false, std::move(warning)};
  }
  state = prune_history(std::move(state), now, config);
  state.circuit_broken = false;
  state.quarantined = false;
  state.current_level = level_from_history(state, config);
  state.capabilities = baseline_capabilities;

  AuditRecord rec;
  rec.kind = "BREAKER_RESET";
  rec.time = now;
  rec.agent = state.agent.str();
  rec.applied_level = state.current_level;
  rec.reason = "OPERATOR_RESET";
  rec.operator_token = std::string(operator_token);
  rec.detail = "residual history " + std::to_string(state.history.size());
  audit.append(encode_audit_record(rec));
  return ResetResult{std::move(state), true, {}};
}

EscalationEngine::EscalationEngine(EscalationConfig config, const MultiAgentSystem& baseline) : config_(config) {
  config_.validate();
  for (const auto& id : baseline.agents()) {
    baseline_.emplace(id, baseline.capabilities(id));
    states_.emplace(id, AgentEscalationState(id, baseline.capabilities(id), baseline.trust(id)));
  }
}

AgentEscalationState& EscalationEngine::mut(const AgentId& agent) {
  auto it = states_.find(agent);
  if (it == states_.end()) throw ConfigError("no escalation state for '" + agent.str() + "'");
  return it->second;
}

const AgentEscalationState& EscalationEngine::state(const AgentId& agent) const {
  auto it = states_.find(agent);
  if (it == states_.end()) throw ConfigError("no escalation state for '" + agent.str() + "'");
  return it->second;
}

const std::set<Capability>& EscalationEngine::baseline(const AgentId& agent) const {
  auto it = baseline_.find(agent);
  if (it == baseline_.end()) throw ConfigError("no baseline for '" + agent.str() + "'");
  return it->second;
}

std::vector<AgentId> EscalationEngine::agents() const {
  std::vector<AgentId> out;
  for (const auto& [id, s] : states_) out.push_back(id);
  return out;
}

void EscalationEngine::prune(const AgentId& agent, double now) {
  auto& s = mut(agent);
  s = prune_history(std::move(s), now, config_);
}

EscalationEngine::Step EscalationEngine::record_violation(const AgentId& agent, ViolationRecord record, int base_level) {
  auto& s = mut(agent);
  s = prune_history(std::move(s), record.time, config_);
  Step step;
  step.history_before = s.history.size();
  step.graduated_level = compute_level(base_level, s.history.size(), config_.k);
  const double now = record.time;
  s.history.push_back(std::move(record));
  if (config_.breaker_enabled && !s.circuit_broken && check_circuit_breaker(s, now, config_)) {
    step.breaker_tripped = true;
  }
  return step;
}

void EscalationEngine::quarantine(const AgentId& agent) {
  auto& s = mut(agent);
  s.quarantined = true;
  s.current_level = kMaxLevel;
  s.capabilities.clear();
}

void EscalationEngine::set_level(const AgentId& agent, int level) {
  if (level < 0 || level > kMaxLevel) throw ConfigError("level outside 0..4");
  auto& s = mut(agent);
  if (s.quarantined) return;
  s.current_level = level;
}

double EscalationEngine::apply_trust(const AgentId& agent, int applied_level) {
  auto& s = mut(agent);
  s = update_trust(std::move(s), applied_level);
  return s.trust();
}

ResetResult EscalationEngine::reset(const AgentId& agent, std::string_view operator_token, double now,
                                    MerkleAuditLog& audit) {
  auto& s = mut(agent);
  ResetResult r = reset_circuit_breaker(s, operator_token, now, config_, baseline(agent), audit);
  s = r.state;
  return r;
}

void EscalationEngine::replace_state(const AgentId& agent, AgentEscalationState state) { mut(agent) = std::move(state); }

}  // namespace gaat
