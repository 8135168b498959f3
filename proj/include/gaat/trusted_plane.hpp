#pragma once

#include <map>
#include <memory>

#include "gaat/canonical.hpp"
#include "gaat/core_model.hpp"
#include "gaat/crypto.hpp"

namespace gaat {

class KeyRegistry {
 public:
  void register_key(const AgentId& agent, std::shared_ptr<const VerificationKey> key);
  void revoke(const AgentId& agent);
  void reinstate(const AgentId& agent);
  [[nodiscard]] bool is_registered(const AgentId& agent) const { return keys_.count(agent) != 0; }
  /// Registered and not revoked, else nullptr.
  [[nodiscard]] const VerificationKey* active_key(const AgentId& agent) const;

 private:
  struct Entry {
    std::shared_ptr<const VerificationKey> key;
    bool revoked = false;
  };
  std::map<AgentId, Entry> keys_;
};

/// Signs the signing payload. Throws SigningError when `signer` is null.
[[nodiscard]] GovernanceTelemetryEvent sign_event(GovernanceTelemetryEvent event, const Signer* signer);

/// TRUE: valid under the source's active key. FALSE: key active, signature bad.
/// UNKNOWN: no signature, or the source's key is unregistered or revoked.
[[nodiscard]] Verification verify_event(const GovernanceTelemetryEvent& event, const KeyRegistry& registry);

}  // namespace gaat
