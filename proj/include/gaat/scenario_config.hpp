#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gaat/core_model.hpp"
#include "gaat/enforcement_bus.hpp"

namespace gaat {

struct ForgeryParams {
  double fraction = 0.1;  ///< share of submitted events tampered after signing
};

struct ReplayAttackParams {
  int replays_per_run = 200;
  double expired_fraction = 0.01;  ///< replays delivered after the filter window
};

struct OmissionParams {
  int train_traces = 500;
  int heldout_traces = 500;
  int max_iters = 100;
  double tol = 1e-6;
  double quantile = 0.05;
  int restarts = 3;
};

struct ScenarioConfig {
  static constexpr int kVersion = 1;

  std::uint64_t seed = 20250101;
  int flows_per_run = 500;
  int runs = 10;
  double injection_rate = 0.05;
  /// Indexed by ViolationType.
  std::array<double, 4> injection_weights{1.0, 1.0, 1.0, 1.0};
  double noise_epsilon = 0.02;
  EnforcementMode mode = EnforcementMode::Full;
  /// Indexed by Tier: HIGH, MEDIUM, LOW.
  std::array<double, 3> tier_mix{0.18, 0.35, 0.47};
  std::array<FailMode, 3> fail_modes{FailMode::FailClosed, FailMode::FailClosed, FailMode::FailOpen};
  double window_w = 45.0;
  int k = 3;
  bool circuit_breaker = true;
  double flow_interval = 1.0;
  double hop_spacing = 0.1;
  ReplayFilterConfig replay{100000, 1e-4, 600.0};
  int bootstrap_resamples = 1000;
  double bootstrap_level = 0.95;
  std::string compliance_sink = "compliance_sink";
  /// Empty means the built-in default pack.
  std::string rule_pack;
  ForgeryParams forgery;
  ReplayAttackParams replay_attack;
  OmissionParams omission;

  /// Throws ConfigError.
  void validate() const;
  [[nodiscard]] EscalationConfig escalation() const;
  [[nodiscard]] TierConfig tiers() const;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Strict JSON: unknown keys, wrong types or a version mismatch throw ConfigError.
[[nodiscard]] ScenarioConfig parse_scenario_config(std::string_view text,
                                                   const std::vector<std::string>& overrides = {});
[[nodiscard]] ScenarioConfig load_scenario_config(const std::filesystem::path& path,
                                                  const std::vector<std::string>& overrides = {});
/// Every field written, keys sorted.
[[nodiscard]] std::string serialize_scenario_config(const ScenarioConfig& config);

/// Applies "a.b.c=value" to a JSON document. The value is parsed as JSON when
/// it parses, else taken as a string. Throws ConfigError on a malformed
/// override or a path through a non-object.
void apply_override(std::string& json_text, std::string_view override_expr);

}  // namespace gaat
