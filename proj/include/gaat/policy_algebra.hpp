#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gaat/core_model.hpp"

namespace gaat {

/// Integer value is the severity rank.
enum class Action : std::uint8_t { Allow = 0, Flag = 1, Quarantine = 2, Deny = 3 };
GAAT_ENUM_NAMES(Action, std::string_view{"ALLOW"}, std::string_view{"FLAG"}, std::string_view{"QUARANTINE"},
                std::string_view{"DENY"})

[[nodiscard]] constexpr int severity(Action a) noexcept { return static_cast<int>(a); }

[[nodiscard]] constexpr Action action_max(Action a1, Action a2) noexcept {
  return severity(a1) >= severity(a2) ? a1 : a2;
}

struct PolicyDecision {
  Action action = Action::Allow;
  double confidence = 1.0;

  /// Throws ConfigError unless confidence lies in [0,1].
  static PolicyDecision make(Action action, double confidence);
  bool operator==(const PolicyDecision&) const = default;
};

class Policy {
 public:
  using Fn = std::function<PolicyDecision(const GovernanceTelemetryEvent&)>;

  Policy(std::string id, Fn fn);

  [[nodiscard]] const std::string& id() const noexcept { return id_; }
  PolicyDecision operator()(const GovernanceTelemetryEvent& event) const;

 private:
  std::string id_;
  Fn fn_;
};

/// Max action and max confidence over all members. Empty list is a ConfigError.
[[nodiscard]] Policy parallel_compose(std::vector<Policy> policies);

/// DENY from p1 short-circuits; otherwise action_max with the winning decision's
/// confidence (max confidence on an action tie).
[[nodiscard]] Policy sequential_compose(Policy p1, Policy p2);

[[nodiscard]] PolicyDecision evaluate_policy_set(std::span<const Policy> policies, const GovernanceTelemetryEvent& event);

/// Same as evaluate_policy_set but also reports which members returned a
/// non-ALLOW action, in input order.
struct PolicySetResult {
  PolicyDecision decision;
  std::vector<std::size_t> triggered;
};
[[nodiscard]] PolicySetResult evaluate_policy_set_detailed(std::span<const Policy> policies,
                                                           const GovernanceTelemetryEvent& event);

}  // namespace gaat
