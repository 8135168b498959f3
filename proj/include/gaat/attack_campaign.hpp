#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gaat/hmm.hpp"
#include "gaat/sim_harness.hpp"
#include "gaat/stats.hpp"

namespace gaat {

enum class AttackKind : std::uint8_t { Forgery, Replay, Omission };
GAAT_ENUM_NAMES(AttackKind, std::string_view{"FORGERY"}, std::string_view{"REPLAY"}, std::string_view{"OMISSION"})

struct SecurityReport {
  AttackKind attack = AttackKind::Forgery;
  /// Fail mode forced on every tier; absent means the per-tier configuration.
  std::optional<FailMode> fail_mode;
  std::uint64_t seed = 0;
  int attempts = 0;
  int detected = 0;
  int bypassed = 0;  ///< attack events that completed their operation
  double detection_rate = 0.0;
  double bypass_rate = 0.0;
  /// 1 - completed legitimate operations / no-attack baseline.
  double availability_reduction = 0.0;
  std::map<std::string, double> details;
};

[[nodiscard]] SecurityReport attack_campaign(const ScenarioConfig& config, AttackKind attack,
                                             std::optional<FailMode> fail_mode);

/// Forged signatures: a share of submitted events is altered after signing,
/// half by editing the payload and half by replacing signature bytes.
[[nodiscard]] SecurityReport forgery_campaign(const ScenarioConfig& config, std::optional<FailMode> fail_mode);
/// Replays signed events 1-299 s later (inside the filter window) and a
/// configured share more than one window later.
[[nodiscard]] SecurityReport replay_campaign(const ScenarioConfig& config, std::optional<FailMode> fail_mode);
/// Trains a phase HMM on nominal traces and scores held-out traces with the
/// VALIDATE phase deleted.
[[nodiscard]] SecurityReport omission_campaign(const ScenarioConfig& config, std::optional<FailMode> fail_mode);

// Omission ground truth: four agent phases, INIT -> ROUTE strictly impossible.
namespace omission {
inline const std::vector<std::string> kPhases{"INIT", "VALIDATE", "ROUTE", "CONFIRM"};
inline const std::vector<std::string> kSymbols{"order_received", "schema_check",     "fraud_check",  "inventory_query",
                                               "route_request",  "payment_request",  "shipment_request",
                                               "confirm_sent",   "heartbeat",        "retry"};
inline constexpr std::size_t kValidate = 1;
inline constexpr double kStopProbability = 0.5;  ///< per CONFIRM emission
inline constexpr std::size_t kMaxLength = 60;
}  // namespace omission

[[nodiscard]] HmmModel omission_ground_truth();

struct PhaseTrace {
  std::vector<std::string> symbols;
  std::vector<std::size_t> states;
};

[[nodiscard]] PhaseTrace sample_phase_trace(const HmmModel& truth, Rng& rng);
/// Drops every emission produced while in `phase`.
[[nodiscard]] std::vector<std::string> delete_phase(const PhaseTrace& trace, std::size_t phase);

struct OmissionDetector {
  HmmModel model;
  OmissionThreshold threshold;
  std::vector<std::vector<double>> loglik_traces;  ///< one per restart
  bool loglik_monotone = true;
};

/// Best of `restarts` Baum-Welch runs from random initial models.
[[nodiscard]] OmissionDetector train_omission_detector(const std::vector<std::vector<std::string>>& corpus,
                                                       const OmissionParams& params, std::uint64_t seed);

}  // namespace gaat
