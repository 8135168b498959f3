#include "gaat/agent_state_io.hpp"

#include <fstream>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "gaat/errors.hpp"

namespace gaat {

using nlohmann::json;

const AgentSnapshot& StateSnapshot::find(const std::string& agent) const {
  for (const auto& a : agents) {
    if (a.state.agent.str() == agent) return a;
  }
  throw ConfigError("agent '" + agent + "' not in state file");
}

AgentSnapshot& StateSnapshot::find(const std::string& agent) {
  return const_cast<AgentSnapshot&>(std::as_const(*this).find(agent));
}

StateSnapshot snapshot_bus(const EnforcementBus& bus, double time) {
  StateSnapshot s;
  s.escalation = bus.escalation().config();
  s.time = time;
  for (const auto& a : bus.escalation().agents()) {
    s.agents.push_back(AgentSnapshot{bus.escalation().state(a), bus.escalation().baseline(a)});
  }
  return s;
}

std::string serialize_state_snapshot(const StateSnapshot& snapshot) {
  json agents = json::array();
  for (const auto& a : snapshot.agents) {
    json history = json::array();
    for (const auto& h : a.state.history) {
      history.push_back({{"time", h.time},
                         {"event_ref", to_hex(h.event_ref)},
                         {"policy_id", h.policy_id},
                         {"action", std::string(to_string(h.decision.action))},
                         {"confidence", h.decision.confidence}});
    }
    agents.push_back({{"agent", a.state.agent.str()},
                      {"level", a.state.current_level},
                      {"circuit_broken", a.state.circuit_broken},
                      {"quarantined", a.state.quarantined},
                      {"trust", a.state.trust()},
                      {"capabilities", a.state.capabilities},
                      {"baseline_capabilities", a.baseline},
                      {"history", std::move(history)}});
  }
  const auto& e = snapshot.escalation;
  json doc{{"format", "gaat-agent-state"},
           {"version", StateSnapshot::kVersion},
           {"time", snapshot.time},
           {"escalation",
            {{"window_w", e.window_w},
             {"k", e.k},
             {"cb_threshold", e.cb_threshold},
             {"cb_window", e.cb_window},
             {"breaker_enabled", e.breaker_enabled}}},
           {"agents", std::move(agents)}};
  return doc.dump(2) + "\n";
}

StateSnapshot parse_state_snapshot(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "gaat-agent-state") throw ParseError("not a gaat-agent-state document");
    if (doc.at("version").get<int>() != StateSnapshot::kVersion) throw ParseError("unsupported agent state version");
    StateSnapshot s;
    s.time = doc.at("time").get<double>();
    const json& e = doc.at("escalation");
    s.escalation.window_w = e.at("window_w").get<double>();
    s.escalation.k = e.at("k").get<int>();
    s.escalation.cb_threshold = e.at("cb_threshold").get<int>();
    s.escalation.cb_window = e.at("cb_window").get<double>();
    s.escalation.breaker_enabled = e.at("breaker_enabled").get<bool>();
    s.escalation.validate();
    for (const json& a : doc.at("agents")) {
      std::vector<ViolationRecord> history;
      for (const json& h : a.at("history")) {
        ViolationRecord r;
        r.time = h.at("time").get<double>();
        r.event_ref = digest_from_hex(h.at("event_ref").get<std::string>());
        r.policy_id = h.at("policy_id").get<std::string>();
        r.decision = PolicyDecision::make(parse_enum<Action>(h.at("action").get<std::string>()),
                                          h.at("confidence").get<double>());
        history.push_back(std::move(r));
      }
      const int level = a.at("level").get<int>();
      if (level < 0 || level > kMaxLevel) throw ParseError("agent level out of range");
      AgentSnapshot snap{AgentEscalationState::restore(
                             AgentId(a.at("agent").get<std::string>()), std::move(history), level,
                             a.at("circuit_broken").get<bool>(), a.at("quarantined").get<bool>(),
                             a.at("trust").get<double>(), a.at("capabilities").get<std::set<Capability>>()),
                         a.at("baseline_capabilities").get<std::set<Capability>>()};
      s.agents.push_back(std::move(snap));
    }
    return s;
  } catch (const json::exception& ex) {
    throw ParseError(std::string("agent state: ") + ex.what());
  } catch (const ConfigError& ex) {
    throw ParseError(std::string("agent state: ") + ex.what());
  }
}

StateSnapshot load_state_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_state_snapshot(ss.str());
}

}  // namespace gaat
