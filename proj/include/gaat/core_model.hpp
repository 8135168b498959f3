#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gaat/errors.hpp"

namespace gaat {

using Bytes = std::vector<std::uint8_t>;

enum class Classification : std::uint8_t { Pii, Financial, Operational, Public };
enum class Jurisdiction : std::uint8_t { Eu, Us, Other };
enum class Sensitivity : std::uint8_t { High, Medium, Low };
/// Three-valued signature verification state. Never collapsed to bool.
enum class Verification : std::uint8_t { True, False, Unknown };
enum class ViolationType : std::uint8_t { ConsentMissing, BiasThreshold, DataResidency, UnauthorizedAccess };
enum class Tier : std::uint8_t { High, Medium, Low };
enum class FailMode : std::uint8_t { FailClosed, FailOpen };

template <class E>
struct EnumNames;

#define GAAT_ENUM_NAMES(E, ...)                                        \
  template <>                                                         \
  struct EnumNames<E> {                                               \
    static constexpr std::array names{__VA_ARGS__};                   \
    static constexpr std::string_view type_name = #E;                 \
  };

GAAT_ENUM_NAMES(Classification, std::string_view{"PII"}, std::string_view{"FINANCIAL"},
                std::string_view{"OPERATIONAL"}, std::string_view{"PUBLIC"})
GAAT_ENUM_NAMES(Jurisdiction, std::string_view{"EU"}, std::string_view{"US"}, std::string_view{"OTHER"})
GAAT_ENUM_NAMES(Sensitivity, std::string_view{"HIGH"}, std::string_view{"MEDIUM"}, std::string_view{"LOW"})
GAAT_ENUM_NAMES(Verification, std::string_view{"TRUE"}, std::string_view{"FALSE"}, std::string_view{"UNKNOWN"})
GAAT_ENUM_NAMES(ViolationType, std::string_view{"CONSENT_MISSING"}, std::string_view{"BIAS_THRESHOLD"},
                std::string_view{"DATA_RESIDENCY"}, std::string_view{"UNAUTHORIZED_ACCESS"})
GAAT_ENUM_NAMES(Tier, std::string_view{"HIGH"}, std::string_view{"MEDIUM"}, std::string_view{"LOW"})
GAAT_ENUM_NAMES(FailMode, std::string_view{"FAIL_CLOSED"}, std::string_view{"FAIL_OPEN"})

template <class E>
[[nodiscard]] constexpr std::string_view to_string(E value) {
  return EnumNames<E>::names[static_cast<std::size_t>(value)];
}

template <class E>
[[nodiscard]] std::optional<E> try_parse_enum(std::string_view text) {
  const auto& names = EnumNames<E>::names;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == text) return static_cast<E>(i);
  }
  return std::nullopt;
}

template <class E>
[[nodiscard]] E parse_enum(std::string_view text) {
  if (auto v = try_parse_enum<E>(text)) return *v;
  throw ParseError("invalid " + std::string(EnumNames<E>::type_name) + " value '" + std::string(text) + "'");
}

template <class E>
[[nodiscard]] constexpr std::size_t enum_count() {
  return EnumNames<E>::names.size();
}

class AgentId {
 public:
  AgentId() = default;
  explicit AgentId(std::string id) : id_(std::move(id)) {
    if (id_.empty()) throw ConfigError("agent id must be non-empty");
  }
  [[nodiscard]] const std::string& str() const noexcept { return id_; }
  auto operator<=>(const AgentId&) const = default;
  bool operator==(const AgentId&) const = default;

 private:
  std::string id_;
};

using Capability = std::string;

/// Context values are restricted to strings, 64-bit integers and reals so the
/// canonical form stays unambiguous.
using ContextValue = std::variant<std::string, std::int64_t, double>;
using Context = std::map<std::string, ContextValue, std::less<>>;

struct GovernanceMetadata {
  Classification classification = Classification::Public;
  Jurisdiction jurisdiction = Jurisdiction::Other;
  Sensitivity sensitivity = Sensitivity::Low;
  std::vector<AgentId> lineage;  ///< oldest first
  Verification verified = Verification::Unknown;

  bool operator==(const GovernanceMetadata&) const = default;
};

struct GovernanceTelemetryEvent {
  double timestamp = 0.0;
  AgentId source;
  AgentId receiver;
  std::string operation;
  Context context;
  GovernanceMetadata governance;
  std::uint64_t nonce = 0;
  std::optional<Bytes> signature;

  bool operator==(const GovernanceTelemetryEvent&) const = default;
};

/// Throws ConfigError when the event breaks the data-model invariants.
void validate_event(const GovernanceTelemetryEvent& event, const std::set<std::string, std::less<>>& self_operations = {});

struct Channel {
  AgentId source;
  AgentId receiver;
  std::string label;
  auto operator<=>(const Channel&) const = default;
};

class MultiAgentSystem {
 public:
  void add_agent(const AgentId& id, std::set<Capability> capabilities, double trust, Jurisdiction hosting);
  void add_channel(const AgentId& source, const AgentId& receiver, std::string label);

  [[nodiscard]] bool contains(const AgentId& id) const { return agents_.count(id) != 0; }
  [[nodiscard]] std::vector<AgentId> agents() const;
  [[nodiscard]] const std::set<Channel>& channels() const noexcept { return channels_; }

  [[nodiscard]] const std::set<Capability>& capabilities(const AgentId& id) const;
  void set_capabilities(const AgentId& id, std::set<Capability> caps);
  [[nodiscard]] double trust(const AgentId& id) const;
  /// Clamps to [0,1].
  void set_trust(const AgentId& id, double value);
  [[nodiscard]] Jurisdiction jurisdiction(const AgentId& id) const;
  [[nodiscard]] std::optional<Jurisdiction> find_jurisdiction(const AgentId& id) const;

 private:
  struct Record {
    std::set<Capability> capabilities;
    double trust = 1.0;
    Jurisdiction hosting = Jurisdiction::Other;
  };
  const Record& record(const AgentId& id) const;
  Record& record(const AgentId& id);

  std::map<AgentId, Record> agents_;
  std::set<Channel> channels_;
};

struct RiskTier {
  Tier tier = Tier::Low;
  FailMode fail_mode = FailMode::FailOpen;
  bool operator==(const RiskTier&) const = default;
};

/// Tier lookup table over the 4x3x3 metadata grid plus the tier->fail mode map.
class TierConfig {
 public:
  /// PII and EU -> HIGH; FINANCIAL or sensitivity HIGH -> MEDIUM; else LOW.
  static TierConfig defaults();

  [[nodiscard]] Tier tier_for(Classification c, Jurisdiction j, Sensitivity s) const;
  void set_tier(Classification c, Jurisdiction j, Sensitivity s, Tier t);
  [[nodiscard]] FailMode fail_mode(Tier t) const { return fail_modes_[static_cast<std::size_t>(t)]; }
  void set_fail_mode(Tier t, FailMode m) { fail_modes_[static_cast<std::size_t>(t)] = m; }

 private:
  static std::size_t index(Classification c, Jurisdiction j, Sensitivity s);
  std::array<Tier, 36> table_{};
  std::array<FailMode, 3> fail_modes_{FailMode::FailClosed, FailMode::FailClosed, FailMode::FailOpen};
};

[[nodiscard]] RiskTier derive_risk_tier(const GovernanceTelemetryEvent& event, const TierConfig& config);

}  // namespace gaat
