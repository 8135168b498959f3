#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gaat/policy_algebra.hpp"
#include "gaat/policy_rules.hpp"
#include "gaat/stats.hpp"

namespace gaat {

/// One agent's escalation under steady violation arrivals (rate r per tick,
/// random phase). The bus enforces one violation per `service` ticks, so rates
/// above 1/service break the one-violation-per-cycle assumption and build a
/// backlog. A trial succeeds when the agent reaches its fixed point (level 4
/// or the breaker) or every arrival before T_max = 4kW is enforced by T_max.
struct T2Params {
  double window_w = 20.0;
  int k = 2;
  double service = 2.5;
  int max_base = 2;
  enum class Schedule : std::uint8_t { A3, Mixture } schedule = Schedule::Mixture;
  bool breaker = false;
  double a3_max_rate = 0.4;
  double mixture_light_share = 0.8;
  double light_max = 0.3;
  double heavy_min = 0.3;
  double heavy_max = 0.8;
};

struct T3Params {
  int min_policies = 2;
  int max_policies = 25;
  int permutations = 50;
  /// Adds a stateful policy to every set; used to prove the validator can fail.
  bool failure_fixture = false;
};

struct T4Params {
  double epsilon = 0.02;
  double delta = 0.011;
  double rho = 0.0;
  /// When set, rho is drawn per trial from U[0, rho_max] instead.
  std::optional<double> rho_max;
  int batch = 10000;
  int group = 200;
  double violating_share = 2.0 / 3.0;  ///< q: share of flips that land in a rule-triggering class
};

struct FailureExemplar {
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  std::string trace;
};

struct TheoremReport {
  std::string theorem;  ///< e.g. "T2a", "T3", "T4-rho0"
  int trials = 0;
  int successes = 0;
  double success_fraction = 0.0;
  std::map<std::string, double> values;
  std::vector<FailureExemplar> failures;  ///< first few, replayable from their seed
  bool passed = false;
  std::string criterion;
};

inline constexpr std::size_t kMaxExemplars = 20;

struct T2Trial {
  bool success = false;
  std::string outcome;  ///< "quarantine", "breaker", "drained", "idle", "backlog"
  double rate = 0.0;
  int base = 0;
  double breaker_delay = 0.0;    ///< level 4 time minus the first arrival with ledger count > k_cb
  double threshold_dwell = 0.0;  ///< trip time minus the start of the run of ledger counts >= k_cb
  std::string trace;
};
[[nodiscard]] T2Trial run_t2_trial(const T2Params& params, std::uint64_t seed);
[[nodiscard]] TheoremReport validate_t2_convergence(const T2Params& params, int trials, std::uint64_t seed);

/// Agents, capabilities and hosting used by the T3 generators.
[[nodiscard]] MultiAgentSystem t3_system();
/// Random well-typed rule with 1-3 conditions drawn from every field family.
[[nodiscard]] GovernanceRule random_governance_rule(Rng& rng, std::string id);
/// Random event over the t3_system vocabulary.
[[nodiscard]] GovernanceTelemetryEvent random_governance_event(Rng& rng);
/// Random rules mixed with constant policies.
[[nodiscard]] std::vector<Policy> random_policy_set(Rng& rng, std::size_t size,
                                                   const std::shared_ptr<const RuleEnvironment>& env);

struct T3Trial {
  bool success = false;
  std::size_t set_size = 0;
  PolicyDecision reference;
  std::string trace;
};
[[nodiscard]] T3Trial run_t3_trial(const T3Params& params, std::uint64_t seed);
[[nodiscard]] TheoremReport validate_t3_determinism(const T3Params& params, int trials, std::uint64_t seed);

/// eps + (1 - eps) delta.
[[nodiscard]] double fq_bound(double epsilon, double delta);
/// (1 + rho) * fq_bound.
[[nodiscard]] double fq_corrected_bound(double epsilon, double delta, double rho);
/// Exact FQ rate of the generative model (any rho; the marginal flip rate is eps).
[[nodiscard]] double fq_model_rate(double epsilon, double delta, double violating_share);

struct T4Trial {
  double rho = 0.0;
  double rate = 0.0;
  bool within_bound = false;
  bool within_corrected = false;
};
[[nodiscard]] T4Trial run_t4_trial(const T4Params& params, std::uint64_t seed);
/// Returns two reports: independence bound and corrected bound.
[[nodiscard]] std::vector<TheoremReport> validate_t4_false_quarantine(const T4Params& params, int trials,
                                                                     std::uint64_t seed, const std::string& tag);

struct TheoremSuiteConfig {
  int trials = 10000;
  std::uint64_t seed = 20250101;
  bool t3_failure_fixture = false;
};

/// Which of T2, T3, T4 to run; empty runs all.
[[nodiscard]] std::vector<TheoremReport> run_theorem_suite(const TheoremSuiteConfig& config,
                                                           const std::vector<std::string>& theorems = {});

}  // namespace gaat
