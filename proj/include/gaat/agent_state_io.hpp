#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "gaat/enforcement_bus.hpp"
#include "gaat/escalation_engine.hpp"

namespace gaat {

/// Persisted escalation state, written by `run --state-out` and consumed by
/// `breaker-reset`.
struct AgentSnapshot {
  AgentEscalationState state;
  std::set<Capability> baseline;
};

struct StateSnapshot {
  static constexpr int kVersion = 1;
  EscalationConfig escalation;
  double time = 0.0;  ///< event time the snapshot was taken at
  std::vector<AgentSnapshot> agents;

  [[nodiscard]] AgentSnapshot& find(const std::string& agent);
  [[nodiscard]] const AgentSnapshot& find(const std::string& agent) const;
};

[[nodiscard]] StateSnapshot snapshot_bus(const EnforcementBus& bus, double time);

[[nodiscard]] std::string serialize_state_snapshot(const StateSnapshot& snapshot);
/// Throws ParseError.
[[nodiscard]] StateSnapshot parse_state_snapshot(const std::string& text);
/// Throws StorageError or ParseError.
[[nodiscard]] StateSnapshot load_state_snapshot(const std::filesystem::path& path);

}  // namespace gaat
