#include "gaat/trusted_plane.hpp"

namespace gaat {

void KeyRegistry::register_key(const AgentId& agent, std::shared_ptr<const VerificationKey> key) {
  if (!key) throw ConfigError("null verification key for '" + agent.str() + "'");
  keys_[agent] = Entry{std::move(key), false};
}

void KeyRegistry::revoke(const AgentId& agent) {
  auto it = keys_.find(agent);
  if (it == keys_.end()) throw ConfigError("cannot revoke unregistered key '" + agent.str() + "'");
  it->second.revoked = true;
}

void KeyRegistry::reinstate(const AgentId& agent) {
  auto it = keys_.find(agent);
  if (it == keys_.end()) throw ConfigError("cannot reinstate unregistered key '" + agent.str() + "'");
  it->second.revoked = false;
}

const VerificationKey* KeyRegistry::active_key(const AgentId& agent) const {
  auto it = keys_.find(agent);
  if (it == keys_.end() || it->second.revoked) return nullptr;
  return it->second.key.get();
}

GovernanceTelemetryEvent sign_event(GovernanceTelemetryEvent event, const Signer* signer) {
  if (signer == nullptr) throw SigningError("no signing key for '" + event.source.str() + "'");
  event.signature = signer->sign(signing_payload(event));
  return event;
}

Verification verify_event(const GovernanceTelemetryEvent& event, const KeyRegistry& registry) {
  if (!event.signature || event.signature->empty()) return Verification::Unknown;
  const VerificationKey* key = registry.active_key(event.source);
  if (key == nullptr) return Verification::Unknown;
  Bytes payload;
  try {
    payload = signing_payload(event);
  } catch (const SerializationError&) {
    return Verification::False;
  }
  return key->verify(payload, *event.signature) ? Verification::True : Verification::False;
}

}  // namespace gaat
