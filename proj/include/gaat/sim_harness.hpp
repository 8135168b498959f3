#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gaat/enforcement_bus.hpp"
#include "gaat/scenario_config.hpp"

namespace gaat {

/// Agent and capability vocabulary of the e-commerce scenario.
namespace scenario {
inline const AgentId kOrder{"order_agent"};
inline const AgentId kInventory{"inventory_agent"};
inline const AgentId kPayment{"payment_agent"};
inline const AgentId kShipping{"shipping_agent"};
inline const AgentId kAnalytics{"analytics_agent"};
inline constexpr int kHops = 4;
inline constexpr std::string_view kUnauthorizedOperation = "access_pii";
}  // namespace scenario

/// The five agents plus the compliance sink named by the config.
[[nodiscard]] MultiAgentSystem scenario_system(const ScenarioConfig& config);

enum class ResidencyShape : std::uint8_t { Direct, Chain };

struct Flow {
  std::size_t index = 0;
  Tier tier = Tier::Low;
  std::optional<ViolationType> injected;
  std::optional<ResidencyShape> residency_shape;
  /// Unsigned events in hop order; hop 3 is terminal.
  std::vector<GovernanceTelemetryEvent> hops;
};

struct RunStream {
  std::size_t run_index = 0;
  std::vector<Flow> flows;
};

[[nodiscard]] RunStream generate_run(const ScenarioConfig& config, std::size_t run_index);
/// SHA-256 over the canonical encodings of every event in order.
[[nodiscard]] Digest stream_digest(const RunStream& stream);

/// Largest-remainder apportionment of `total` across `weights`; ties go to the
/// lowest index after rotating by `rotate`.
[[nodiscard]] std::vector<int> apportion(int total, std::span<const double> weights, std::size_t rotate = 0);

struct FlowResult {
  std::vector<GovernanceTelemetryEvent> submitted;  ///< signed, as delivered to the bus
  std::vector<EnforcementOutcome> outcomes;
  bool terminal_completed = false;  ///< terminal hop completed against its own receiver
};

/// Called on each signed event before submission; may tamper with it.
/// Returns true when it did.
using EventMutator = std::function<bool(GovernanceTelemetryEvent&, std::size_t flow, std::size_t hop)>;

struct RunOptions {
  std::optional<FailMode> fail_mode_override;  ///< applied to every tier
  std::optional<EnforcementMode> mode_override;
  std::optional<std::filesystem::path> audit_path;
  /// Called with each run's bus after its last flow.
  std::function<void(std::size_t run_index, const EnforcementBus& bus)> on_run_end;
};

/// One run's live system: keys, bus and audit log.
class RunContext {
 public:
  RunContext(const ScenarioConfig& config, const RulePack& pack, std::size_t run_index, const RunOptions& options = {});

  [[nodiscard]] GovernanceTelemetryEvent sign(GovernanceTelemetryEvent event) const;
  /// Plays the flow's hops in order, halting on the first block or redirect.
  FlowResult play(const Flow& flow, const EventMutator& mutate = nullptr);
  EnforcementOutcome submit(const GovernanceTelemetryEvent& signed_event, double now);

  [[nodiscard]] EnforcementBus& bus() noexcept { return *bus_; }
  [[nodiscard]] const EnforcementBus& bus() const noexcept { return *bus_; }

 private:
  std::map<AgentId, std::unique_ptr<EcdsaP256Signer>> signers_;
  std::unique_ptr<EnforcementBus> bus_;
};

struct KindTally {
  int injected = 0;
  int prevented = 0;
  bool operator==(const KindTally&) const = default;
};

struct RunMetrics {
  std::size_t run_index = 0;
  int flows = 0;
  int legit_flows = 0;
  int legit_enforced = 0;
  std::array<KindTally, 4> kinds{};
  KindTally residency_chain;
  KindTally residency_direct;
  std::array<int, 3> tier_flows{};
  int enforced_events = 0;  ///< decision other than ALLOW
  int level_sum = 0;
  std::uint64_t processed_events = 0;
  std::uint64_t audit_records = 0;
  std::uint64_t policy_evaluations = 0;
  int fail_closed_breaches = 0;        ///< unverified, fail-closed tier, completed
  int post_quarantine_completions = 0;  ///< completed events from an already quarantined source
  int quarantined_agents = 0;
  std::vector<double> latency_detection_ms;
  std::vector<double> latency_e2e_ms;

  [[nodiscard]] int injected() const;
  [[nodiscard]] int prevented() const;
  [[nodiscard]] std::optional<double> vpr() const;
  [[nodiscard]] double fpr() const;
  [[nodiscard]] double avg_level() const;
};

/// Adds one played flow to the run's tallies.
void accumulate(RunMetrics& metrics, const Flow& flow, const FlowResult& result, const EnforcementBus& bus);

[[nodiscard]] RunMetrics execute_run(const ScenarioConfig& config, const RulePack& pack, std::size_t run_index,
                                     const RunOptions& options = {});

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

struct MetricsReport {
  ScenarioConfig config;
  std::vector<RunMetrics> runs;
  std::optional<double> vpr;  ///< absent when nothing was injected
  std::optional<double> ver;
  double fpr = 0.0;
  double avg_level = 0.0;
  std::array<KindTally, 4> kinds{};
  KindTally residency_chain;
  KindTally residency_direct;
  std::optional<Interval> vpr_ci;
  std::optional<Interval> fpr_ci;
  std::optional<Interval> avg_level_ci;
  /// P50/P99 in ms; filled only when latency is requested.
  std::optional<std::array<double, 4>> latency;
  bool audit_totality = true;
  int fail_closed_breaches = 0;
  int post_quarantine_completions = 0;
};

/// The pack named by config.rule_pack, or the default pack.
[[nodiscard]] RulePack scenario_rule_pack(const ScenarioConfig& config);

[[nodiscard]] MetricsReport run_scenario(const ScenarioConfig& config, bool with_latency = false,
                                         const RunOptions& options = {});
/// Aggregates per-run metrics and bootstrap intervals.
[[nodiscard]] MetricsReport summarize(const ScenarioConfig& config, std::vector<RunMetrics> runs, bool with_latency);

struct SweepRow {
  double rate = 0.0;
  MetricsReport report;
};

inline const std::vector<double> kDefaultSweepRates{0.001, 0.01, 0.05, 0.075, 0.10};

[[nodiscard]] std::vector<SweepRow> sensitivity_sweep(const ScenarioConfig& config,
                                                      const std::vector<double>& rates = kDefaultSweepRates,
                                                      bool with_latency = false);

}  // namespace gaat
