#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaat/attack_campaign.hpp"
#include "gaat/monte_carlo.hpp"
#include "gaat/sim_harness.hpp"

namespace gaat {

// JSON documents have sorted keys and end with a newline. Latency appears only
// when it was measured, so reports without it are byte-stable across reruns.

[[nodiscard]] nlohmann::json metrics_json(const MetricsReport& report);
[[nodiscard]] nlohmann::json sweep_json(const ScenarioConfig& config, const std::vector<SweepRow>& rows);
[[nodiscard]] nlohmann::json security_json(const ScenarioConfig& config, const SecurityReport& report);
[[nodiscard]] nlohmann::json theorem_json(std::uint64_t seed, int trials, const std::vector<TheoremReport>& reports);

[[nodiscard]] std::string render_json(const nlohmann::json& doc);

/// Per-run rows plus a trailing "all" row. Undefined ratios print as n/a.
[[nodiscard]] std::string metrics_csv(const MetricsReport& report);
[[nodiscard]] std::string sweep_csv(const std::vector<SweepRow>& rows);
[[nodiscard]] std::string security_csv(const SecurityReport& report);
[[nodiscard]] std::string theorem_csv(const std::vector<TheoremReport>& reports);

/// Atomic write; throws StorageError.
void write_report(const std::filesystem::path& path, const std::string& contents);

}  // namespace gaat
