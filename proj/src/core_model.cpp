#include "gaat/core_model.hpp"

#include <algorithm>
#include <cmath>

namespace gaat {

void validate_event(const GovernanceTelemetryEvent& event, const std::set<std::string, std::less<>>& self_operations) {
  if (!(event.timestamp > 0.0) || !std::isfinite(event.timestamp)) {
    throw ConfigError("event timestamp must be finite and > 0");
  }
  if (event.source.str().empty() || event.receiver.str().empty()) {
    throw ConfigError("event endpoints must be non-empty");
  }
  if (event.source == event.receiver && self_operations.count(event.operation) == 0) {
    throw ConfigError("source equals receiver for non-self operation '" + event.operation + "'");
  }
}

void MultiAgentSystem::add_agent(const AgentId& id, std::set<Capability> capabilities, double trust,
                                 Jurisdiction hosting) {
  if (id.str().empty()) throw ConfigError("agent id must be non-empty");
  if (agents_.count(id) != 0) throw ConfigError("duplicate agent '" + id.str() + "'");
  for (const auto& c : capabilities) {
    if (c.empty()) throw ConfigError("capability names must be non-empty");
  }
  if (!(trust >= 0.0 && trust <= 1.0)) throw ConfigError("trust must lie in [0,1]");
  agents_.emplace(id, Record{std::move(capabilities), trust, hosting});
}

void MultiAgentSystem::add_channel(const AgentId& source, const AgentId& receiver, std::string label) {
  if (!contains(source) || !contains(receiver)) {
    throw ConfigError("channel endpoint not registered: " + source.str() + " -> " + receiver.str());
  }
  channels_.insert(Channel{source, receiver, std::move(label)});
}

std::vector<AgentId> MultiAgentSystem::agents() const {
  std::vector<AgentId> out;
  out.reserve(agents_.size());
  for (const auto& [id, rec] : agents_) out.push_back(id);
  return out;
}

const MultiAgentSystem::Record& MultiAgentSystem::record(const AgentId& id) const {
  auto it = agents_.find(id);
  if (it == agents_.end()) throw ConfigError("unknown agent '" + id.str() + "'");
  return it->second;
}

MultiAgentSystem::Record& MultiAgentSystem::record(const AgentId& id) {
  auto it = agents_.find(id);
  if (it == agents_.end()) throw ConfigError("unknown agent '" + id.str() + "'");
  return it->second;
}

const std::set<Capability>& MultiAgentSystem::capabilities(const AgentId& id) const { return record(id).capabilities; }

void MultiAgentSystem::set_capabilities(const AgentId& id, std::set<Capability> caps) {
  record(id).capabilities = std::move(caps);
}

double MultiAgentSystem::trust(const AgentId& id) const { return record(id).trust; }

void MultiAgentSystem::set_trust(const AgentId& id, double value) {
  record(id).trust = std::isnan(value) ? 0.0 : std::clamp(value, 0.0, 1.0);
}

Jurisdiction MultiAgentSystem::jurisdiction(const AgentId& id) const { return record(id).hosting; }

std::optional<Jurisdiction> MultiAgentSystem::find_jurisdiction(const AgentId& id) const {
  auto it = agents_.find(id);
  if (it == agents_.end()) return std::nullopt;
  return it->second.hosting;
}

std::size_t TierConfig::index(Classification c, Jurisdiction j, Sensitivity s) {
  return (static_cast<std::size_t>(c) * 3 + static_cast<std::size_t>(j)) * 3 + static_cast<std::size_t>(s);
}

TierConfig TierConfig::defaults() {
  TierConfig cfg;
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t s = 0; s < 3; ++s) {
        const auto cl = static_cast<Classification>(c);
        const auto ju = static_cast<Jurisdiction>(j);
        const auto se = static_cast<Sensitivity>(s);
        Tier t = Tier::Low;
        if (cl == Classification::Pii && ju == Jurisdiction::Eu) {
          t = Tier::High;
        } else if (cl == Classification::Financial || se == Sensitivity::High) {
          t = Tier::Medium;
        }
        cfg.table_[index(cl, ju, se)] = t;
      }
    }
  }
  return cfg;
}

Tier TierConfig::tier_for(Classification c, Jurisdiction j, Sensitivity s) const { return table_[index(c, j, s)]; }

void TierConfig::set_tier(Classification c, Jurisdiction j, Sensitivity s, Tier t) { table_[index(c, j, s)] = t; }

RiskTier derive_risk_tier(const GovernanceTelemetryEvent& event, const TierConfig& config) {
  const auto& g = event.governance;
  const Tier t = config.tier_for(g.classification, g.jurisdiction, g.sensitivity);
  return RiskTier{t, config.fail_mode(t)};
}

}  // namespace gaat
