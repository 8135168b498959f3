#include "gaat/attack_campaign.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "gaat/errors.hpp"

namespace gaat {

namespace {

constexpr std::uint64_t kForgeryStream = 0xF0'0000;
constexpr std::uint64_t kReplayStream = 0xAE'0000;
constexpr std::uint64_t kOmissionStream = 0x0E'0000;

RunOptions options_for(std::optional<FailMode> fail_mode) {
  RunOptions o;
  o.fail_mode_override = fail_mode;
  return o;
}

/// Completed operations of legitimate (non-injected) flows.
int legit_completions(const Flow& flow, const FlowResult& r) {
  if (flow.injected) return 0;
  int n = 0;
  for (const auto& o : r.outcomes) n += o.operation_completed ? 1 : 0;
  return n;
}

int baseline_completions(const ScenarioConfig& config, const RulePack& pack, const RunStream& stream,
                         const RunOptions& opts) {
  RunContext ctx(config, pack, stream.run_index, opts);
  int n = 0;
  for (const auto& f : stream.flows) n += legit_completions(f, ctx.play(f));
  return n;
}

void finalize(SecurityReport& rep, double baseline, double attacked) {
  rep.detection_rate = rep.attempts == 0 ? 0.0 : static_cast<double>(rep.detected) / rep.attempts;
  rep.bypass_rate = rep.attempts == 0 ? 0.0 : static_cast<double>(rep.bypassed) / rep.attempts;
  rep.availability_reduction = baseline > 0.0 ? std::max(0.0, 1.0 - attacked / baseline) : 0.0;
  rep.details["legit_completed_baseline"] = baseline;
  rep.details["legit_completed_under_attack"] = attacked;
}

}  // namespace

SecurityReport forgery_campaign(const ScenarioConfig& config, std::optional<FailMode> fail_mode) {
  config.validate();
  const RulePack pack = scenario_rule_pack(config);
  const RunOptions opts = options_for(fail_mode);
  SecurityReport rep;
  rep.attack = AttackKind::Forgery;
  rep.fail_mode = fail_mode;
  rep.seed = config.seed;
  double baseline = 0.0;
  double attacked = 0.0;
  int payload_edits = 0;
  int signature_edits = 0;
  int rejected = 0;
  for (int run = 0; run < config.runs; ++run) {
    const auto r = static_cast<std::size_t>(run);
    const RunStream stream = generate_run(config, r);
    baseline += baseline_completions(config, pack, stream, opts);

    RunContext ctx(config, pack, r, opts);
    Rng rng(derive_seed(config.seed, kForgeryStream + r));
    std::vector<bool> forged;
    const EventMutator mutate = [&](GovernanceTelemetryEvent& ev, std::size_t, std::size_t hop) {
      if (forged.size() <= hop) forged.resize(hop + 1, false);
      const bool forge = rng.bernoulli(config.forgery.fraction);
      const bool payload = rng.bernoulli(0.5);
      const std::uint64_t noise = rng.next_u64();
      forged[hop] = forge;
      if (!forge) return false;
      if (payload || !ev.signature || ev.signature->empty()) {
        ev.context["forged"] = std::int64_t{1};
        ++payload_edits;
      } else {
        Rng bytes(noise);
        for (auto& b : *ev.signature) b = static_cast<std::uint8_t>(bytes.next_u64());
        ++signature_edits;
      }
      return true;
    };
    for (const auto& f : stream.flows) {
      forged.assign(scenario::kHops, false);
      const FlowResult res = ctx.play(f, mutate);
      attacked += legit_completions(f, res);
      for (std::size_t h = 0; h < res.outcomes.size(); ++h) {
        if (!forged[h]) continue;
        const auto& o = res.outcomes[h];
        ++rep.attempts;
        if (o.verification == Verification::False) ++rep.detected;
        if (o.operation_completed) {
          ++rep.bypassed;
        } else {
          ++rejected;
        }
      }
    }
  }
  finalize(rep, baseline, attacked);
  rep.details["payload_edits"] = payload_edits;
  rep.details["signature_edits"] = signature_edits;
  rep.details["rejection_rate"] = rep.attempts == 0 ? 0.0 : static_cast<double>(rejected) / rep.attempts;
  return rep;
}

SecurityReport replay_campaign(const ScenarioConfig& config, std::optional<FailMode> fail_mode) {
  config.validate();
  const RulePack pack = scenario_rule_pack(config);
  const RunOptions opts = options_for(fail_mode);
  SecurityReport rep;
  rep.attack = AttackKind::Replay;
  rep.fail_mode = fail_mode;
  rep.seed = config.seed;
  double baseline = 0.0;
  double attacked = 0.0;
  int in_window = 0;
  int in_window_detected = 0;
  int expired = 0;
  int expired_escaped = 0;
  const double window = config.replay.window_seconds;

  struct Pending {
    double time;
    std::uint64_t seq;
    GovernanceTelemetryEvent event;
    bool expired;
    bool operator>(const Pending& o) const { return time != o.time ? time > o.time : seq > o.seq; }
  };

  for (int run = 0; run < config.runs; ++run) {
    const auto r = static_cast<std::size_t>(run);
    const RunStream stream = generate_run(config, r);
    baseline += baseline_completions(config, pack, stream, opts);

    Rng rng(derive_seed(config.seed, kReplayStream + r));
    const int total = config.replay_attack.replays_per_run;
    const int n_expired = static_cast<int>(std::llround(total * config.replay_attack.expired_fraction));
    std::vector<std::vector<bool>> slots(stream.flows.size());
    for (int i = 0; i < total; ++i) slots[rng.index(stream.flows.size())].push_back(i < n_expired);

    RunContext ctx(config, pack, r, opts);
    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue;
    std::uint64_t seq = 0;
    auto drain = [&](double until) {
      while (!queue.empty() && queue.top().time <= until) {
        const Pending p = queue.top();
        queue.pop();
        const auto out = ctx.submit(p.event, p.time);
        ++rep.attempts;
        const bool caught = out.reason == OutcomeReason::ReplayRejected;
        if (caught) ++rep.detected;
        if (out.operation_completed) ++rep.bypassed;
        if (p.expired) {
          ++expired;
          if (!caught) ++expired_escaped;
        } else {
          ++in_window;
          if (caught) ++in_window_detected;
        }
      }
    };
    for (std::size_t fi = 0; fi < stream.flows.size(); ++fi) {
      const auto& f = stream.flows[fi];
      drain(f.hops.front().timestamp);
      const FlowResult res = ctx.play(f);
      attacked += legit_completions(f, res);
      for (const bool is_expired : slots[fi]) {
        const auto& original = res.submitted[rng.index(res.submitted.size())];
        const double delay = is_expired ? rng.uniform(window + 1.0, 1.5 * window) : rng.uniform(1.0, window / 2.0 - 1.0);
        queue.push(Pending{original.timestamp + delay, seq++, original, is_expired});
      }
    }
    drain(std::numeric_limits<double>::infinity());
  }
  finalize(rep, baseline, attacked);
  rep.details["in_window_replays"] = in_window;
  rep.details["in_window_detected"] = in_window_detected;
  rep.details["in_window_detection_rate"] = in_window == 0 ? 0.0 : static_cast<double>(in_window_detected) / in_window;
  rep.details["expired_replays"] = expired;
  rep.details["expired_escaped"] = expired_escaped;
  return rep;
}

HmmModel omission_ground_truth() {
  HmmModel m;
  m.states = omission::kPhases;
  m.symbols = omission::kSymbols;
  m.initial = {1.0, 0.0, 0.0, 0.0};
  // clang-format off
  m.transition = {
      0.30, 0.70, 0.00, 0.00,
      0.00, 0.35, 0.65, 0.00,
      0.00, 0.00, 0.45, 0.55,
      0.00, 0.00, 0.00, 1.00,
  };
  // order_received schema fraud inventory route payment shipment confirm heartbeat retry
  m.emission = {
      0.80, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.10, 0.10,
      0.00, 0.45, 0.35, 0.00, 0.00, 0.00, 0.00, 0.00, 0.10, 0.10,
      0.00, 0.00, 0.00, 0.30, 0.30, 0.20, 0.15, 0.00, 0.05, 0.00,
      0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.80, 0.10, 0.10,
  };
  // clang-format on
  m.validate();
  return m;
}

namespace {

std::size_t draw_row(const std::vector<double>& mat, std::size_t row, std::size_t width, Rng& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t j = 0; j < width; ++j) {
    acc += mat[row * width + j];
    if (u < acc) return j;
  }
  for (std::size_t j = width; j-- > 0;) {
    if (mat[row * width + j] > 0.0) return j;
  }
  return width - 1;
}

}  // namespace

PhaseTrace sample_phase_trace(const HmmModel& truth, Rng& rng) {
  PhaseTrace t;
  const std::size_t last = truth.n() - 1;
  std::size_t state = draw_row(truth.initial, 0, truth.n(), rng);
  while (t.symbols.size() < omission::kMaxLength) {
    t.states.push_back(state);
    t.symbols.push_back(truth.symbols[draw_row(truth.emission, state, truth.m(), rng)]);
    if (state == last && rng.bernoulli(omission::kStopProbability)) break;
    state = draw_row(truth.transition, state, truth.n(), rng);
  }
  return t;
}

std::vector<std::string> delete_phase(const PhaseTrace& trace, std::size_t phase) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < trace.symbols.size(); ++i) {
    if (trace.states[i] != phase) out.push_back(trace.symbols[i]);
  }
  return out;
}

OmissionDetector train_omission_detector(const std::vector<std::vector<std::string>>& corpus,
                                         const OmissionParams& params, std::uint64_t seed) {
  if (corpus.empty()) throw TrainingError("omission training corpus is empty");
  std::vector<std::string> alphabet = omission::kSymbols;
  for (const auto& seq : corpus) {
    for (const auto& s : seq) {
      if (std::find(alphabet.begin(), alphabet.end(), s) == alphabet.end()) alphabet.push_back(s);
    }
  }
  HmmModel shape;
  shape.symbols = alphabet;
  std::vector<std::vector<std::size_t>> encoded;
  encoded.reserve(corpus.size());
  for (const auto& seq : corpus) {
    std::vector<std::size_t> e;
    for (const auto& s : seq) e.push_back(*shape.symbol_index(s));
    encoded.push_back(std::move(e));
  }

  OmissionDetector det;
  std::optional<TrainingResult> best;
  for (int i = 0; i < params.restarts; ++i) {
    HmmModel init = random_hmm(omission::kPhases, alphabet, derive_seed(seed, static_cast<std::uint64_t>(i)));
    TrainingResult tr = baum_welch_train(encoded, std::move(init), params.max_iters, params.tol);
    const auto& ll = tr.loglik_trace;
    for (std::size_t j = 1; j < ll.size(); ++j) {
      if (ll[j] < ll[j - 1] - 1e-9 * std::max(1.0, std::abs(ll[j - 1]))) det.loglik_monotone = false;
    }
    det.loglik_traces.push_back(ll);
    if (!best || ll.back() > best->loglik_trace.back()) best = std::move(tr);
  }
  det.model = best->model;
  det.threshold = calibrate_threshold(det.model, encoded, params.quantile);
  return det;
}

SecurityReport omission_campaign(const ScenarioConfig& config, std::optional<FailMode> fail_mode) {
  config.validate();
  const auto& p = config.omission;
  SecurityReport rep;
  rep.attack = AttackKind::Omission;
  rep.fail_mode = fail_mode;
  rep.seed = config.seed;

  const HmmModel truth = omission_ground_truth();
  Rng rng(derive_seed(config.seed, kOmissionStream));
  std::vector<std::vector<std::string>> train;
  for (int i = 0; i < p.train_traces; ++i) train.push_back(sample_phase_trace(truth, rng).symbols);
  const OmissionDetector det = train_omission_detector(train, p, derive_seed(config.seed, kOmissionStream + 1));

  int nominal = 0;
  int false_alerts = 0;
  for (int i = 0; i < p.heldout_traces; ++i) {
    const auto t = sample_phase_trace(truth, rng);
    ++nominal;
    if (score_for_omission(det.model, det.threshold, t.symbols).verdict == OmissionVerdict::OmissionSuspected) {
      ++false_alerts;
    }
  }
  int out_of_alphabet = 0;
  for (int i = 0; i < p.heldout_traces; ++i) {
    const auto t = sample_phase_trace(truth, rng);
    const auto attacked = delete_phase(t, omission::kValidate);
    ++rep.attempts;
    const auto s = score_for_omission(det.model, det.threshold, attacked);
    if (s.out_of_alphabet) ++out_of_alphabet;
    if (s.verdict == OmissionVerdict::OmissionSuspected) {
      ++rep.detected;
    } else {
      ++rep.bypassed;
    }
  }
  rep.detection_rate = static_cast<double>(rep.detected) / rep.attempts;
  rep.bypass_rate = static_cast<double>(rep.bypassed) / rep.attempts;
  const double false_alert_rate = static_cast<double>(false_alerts) / nominal;
  const FailMode effective = fail_mode.value_or(config.fail_modes[static_cast<std::size_t>(Tier::High)]);
  // Fail-closed blocks every flagged trace, so false alerts cost availability;
  // fail-open only alerts.
  rep.availability_reduction = effective == FailMode::FailClosed ? false_alert_rate : 0.0;
  rep.details["false_alert_rate"] = false_alert_rate;
  rep.details["theta"] = det.threshold.theta;
  rep.details["train_traces"] = p.train_traces;
  rep.details["heldout_nominal"] = nominal;
  rep.details["out_of_alphabet"] = out_of_alphabet;
  rep.details["loglik_monotone"] = det.loglik_monotone ? 1.0 : 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& t : det.loglik_traces) best = std::max(best, t.back());
  rep.details["final_train_loglik"] = best;
  return rep;
}

SecurityReport attack_campaign(const ScenarioConfig& config, AttackKind attack, std::optional<FailMode> fail_mode) {
  switch (attack) {
    case AttackKind::Forgery:
      return forgery_campaign(config, fail_mode);
    case AttackKind::Replay:
      return replay_campaign(config, fail_mode);
    case AttackKind::Omission:
      return omission_campaign(config, fail_mode);
  }
  throw ConfigError("unknown attack kind");
}

}  // namespace gaat
