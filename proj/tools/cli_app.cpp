#include "cli_app.hpp"

#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "gaat/agent_state_io.hpp"
#include "gaat/attack_campaign.hpp"
#include "gaat/audit_log.hpp"
#include "gaat/canonical.hpp"
#include "gaat/errors.hpp"
#include "gaat/monte_carlo.hpp"
#include "gaat/reports.hpp"
#include "gaat/scenario_config.hpp"
#include "gaat/sim_harness.hpp"

namespace gaat::cli {

namespace {

std::string escape_line(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '\n' || c == '\r') {
      out += ' ';
    } else if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else {
      out += c;
    }
  }
  return out;
}

int fail(std::ostream& err, int code, std::string_view kind, std::string_view message) {
  err << "error code=" << code << " kind=" << kind << " message=\"" << escape_line(message) << "\"\n";
  return code;
}

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  std::string csv;
};

void add_common(CLI::App* sub, Common& c, bool with_csv = true) {
  sub->add_option("--config", c.config, "Scenario config (JSON); defaults when omitted")->check(CLI::ExistingFile);
  sub->add_option("--set", c.sets, "Override a config key, e.g. --set escalation.k=2 (repeatable)");
  sub->add_option("--out", c.out, "Write the JSON report here (atomic); stdout when omitted");
  if (with_csv) sub->add_option("--csv", c.csv, "Also write a CSV report here (atomic)");
}

ScenarioConfig load_config(const Common& c) {
  if (c.config.empty()) return parse_scenario_config(serialize_scenario_config(ScenarioConfig{}), c.sets);
  return load_scenario_config(c.config, c.sets);
}

void emit(std::ostream& out, const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_report(path, text);
  }
}

std::optional<FailMode> fail_mode_option(const std::string& s) {
  if (s == "closed") return FailMode::FailClosed;
  if (s == "open") return FailMode::FailOpen;
  return std::nullopt;
}

std::string status_name(ChainReport::Status s) {
  switch (s) {
    case ChainReport::Status::Ok: return "OK";
    case ChainReport::Status::Tampered: return "TAMPERED";
    case ChainReport::Status::Truncated: return "TRUNCATED";
    case ChainReport::Status::BadHeader: return "BAD_HEADER";
    case ChainReport::Status::AnchorMismatch: return "ANCHOR_MISMATCH";
  }
  return "UNKNOWN";
}

std::string ratio(const std::optional<double>& v) { return v ? format_real(*v) : std::string("n/a"); }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Governance enforcement engine for multi-agent telemetry", "gaat"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  // run
  Common run_c;
  bool run_latency = false;
  std::string run_audit;
  std::string run_state;
  auto* run = app.add_subcommand("run", "Run the scenario and report VPR/VER/FPR");
  add_common(run, run_c);
  run->add_flag("--with-latency", run_latency, "Include stage latency percentiles (not byte-reproducible)");
  run->add_option("--audit-log", run_audit, "Persist each run's audit log to <path>.<run>");
  run->add_option("--state-out", run_state, "Write the last run's agent escalation state here");

  // sweep
  Common sweep_c;
  bool sweep_latency = false;
  std::vector<double> sweep_rates = kDefaultSweepRates;
  auto* sweep = app.add_subcommand("sweep", "Sensitivity sweep over injection rates");
  add_common(sweep, sweep_c);
  sweep->add_option("--rates", sweep_rates, "Injection rates")->delimiter(',')->check(CLI::Range(0.0, 1.0));
  sweep->add_flag("--with-latency", sweep_latency, "Include stage latency percentiles");

  // attack
  Common atk_c;
  std::string atk_kind;
  std::string atk_mode = "per-tier";
  auto* attack = app.add_subcommand("attack", "Adversarial campaign against the trust plane");
  add_common(attack, atk_c);
  attack->add_option("--attack", atk_kind, "forgery, replay or omission")
      ->required()
      ->check(CLI::IsMember({"forgery", "replay", "omission"}));
  attack->add_option("--fail-mode", atk_mode, "closed, open or per-tier")
      ->check(CLI::IsMember({"closed", "open", "per-tier"}));

  // validate-theorems
  TheoremSuiteConfig thm;
  std::vector<std::string> thm_which;
  std::string thm_out;
  std::string thm_csv;
  auto* theorems = app.add_subcommand("validate-theorems", "Monte Carlo validation of T2, T3 and T4");
  theorems->add_option("--trials", thm.trials, "Trials per theorem")->check(CLI::PositiveNumber);
  theorems->add_option("--seed", thm.seed, "Base seed");
  theorems->add_option("--theorem", thm_which, "T2, T3 or T4 (repeatable); all when omitted")
      ->check(CLI::IsMember({"T2", "T3", "T4"}));
  theorems->add_flag("--t3-failure-fixture", thm.t3_failure_fixture,
                     "Add an order-dependent policy to every T3 set; T3 must then fail");
  theorems->add_option("--out", thm_out, "Write the JSON report here (atomic); stdout when omitted");
  theorems->add_option("--csv", thm_csv, "Also write a CSV summary here (atomic)");

  // audit-verify
  std::string av_log;
  std::string av_root;
  auto* verify = app.add_subcommand("audit-verify", "Recompute an audit log's Merkle chain");
  verify->add_option("--log", av_log, "Audit log file")->required();
  verify->add_option("--expected-root", av_root, "Anchored root (64 hex chars) to detect truncation");

  // breaker-reset
  std::string br_state;
  std::string br_agent;
  std::string br_operator;
  std::string br_log;
  std::string br_state_out;
  std::optional<double> br_time;
  auto* reset = app.add_subcommand("breaker-reset", "Operator reset of a quarantined agent");
  reset->add_option("--state", br_state, "Agent state file from `run --state-out`")->required()->check(CLI::ExistingFile);
  reset->add_option("--agent", br_agent, "Agent to reset")->required();
  reset->add_option("--operator", br_operator, "Operator token recorded in the audit log")->required();
  reset->add_option("--log", br_log, "Audit log to append the reset record to")->required()->check(CLI::ExistingFile);
  reset->add_option("--time", br_time, "Event time of the reset; the snapshot time when omitted");
  reset->add_option("--state-out", br_state_out, "Where to write the new state; overwrites --state when omitted");

  // emit-config
  Common emit_c;
  auto* emit_cfg = app.add_subcommand("emit-config", "Print the effective scenario config");
  add_common(emit_cfg, emit_c, false);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    return fail(err, kExitUsage, "usage", e.what());
  }

  try {
    if (*run) {
      const ScenarioConfig config = load_config(run_c);
      RunOptions options;
      if (!run_audit.empty()) options.audit_path = run_audit;
      std::optional<StateSnapshot> last;
      if (!run_state.empty()) {
        const double end = config.flows_per_run * config.flow_interval;
        options.on_run_end = [&](std::size_t, const EnforcementBus& bus) { last = snapshot_bus(bus, end); };
      }
      const MetricsReport report = run_scenario(config, run_latency, options);
      emit(out, run_c.out, render_json(metrics_json(report)));
      if (!run_c.csv.empty()) write_report(run_c.csv, metrics_csv(report));
      if (last) write_report(run_state, serialize_state_snapshot(*last));
      if (!run_c.out.empty()) {
        out << "vpr=" << ratio(report.vpr) << " fpr=" << format_real(report.fpr)
            << " avg_level=" << format_real(report.avg_level) << "\n";
      }
      return kExitOk;
    }
    if (*sweep) {
      const ScenarioConfig config = load_config(sweep_c);
      const auto rows = sensitivity_sweep(config, sweep_rates, sweep_latency);
      emit(out, sweep_c.out, render_json(sweep_json(config, rows)));
      if (!sweep_c.csv.empty()) write_report(sweep_c.csv, sweep_csv(rows));
      return kExitOk;
    }
    if (*attack) {
      const ScenarioConfig config = load_config(atk_c);
      const AttackKind kind = atk_kind == "forgery" ? AttackKind::Forgery
                              : atk_kind == "replay" ? AttackKind::Replay
                                                     : AttackKind::Omission;
      const SecurityReport report = attack_campaign(config, kind, fail_mode_option(atk_mode));
      emit(out, atk_c.out, render_json(security_json(config, report)));
      if (!atk_c.csv.empty()) write_report(atk_c.csv, security_csv(report));
      return kExitOk;
    }
    if (*theorems) {
      const auto reports = run_theorem_suite(thm, thm_which);
      emit(out, thm_out, render_json(theorem_json(thm.seed, thm.trials, reports)));
      if (!thm_csv.empty()) write_report(thm_csv, theorem_csv(reports));
      bool all = true;
      for (const auto& r : reports) {
        err << r.theorem << " " << r.successes << "/" << r.trials << " " << (r.passed ? "PASS" : "FAIL") << "\n";
        all = all && r.passed;
      }
      if (!all) return fail(err, kExitThreshold, "threshold", "theorem validation below threshold");
      return kExitOk;
    }
    if (*verify) {
      std::optional<Digest> anchor;
      if (!av_root.empty()) anchor = digest_from_hex(av_root);
      const ChainReport r = audit_verify_chain(av_log, anchor);
      if (r.ok()) {
        out << "ok records=" << r.records << " root=" << to_hex(r.root) << "\n";
        return kExitOk;
      }
      out << "tampered status=" << status_name(r.status) << " first_tampered_index="
          << (r.first_bad_index ? std::to_string(*r.first_bad_index) : std::string("none"))
          << " verified_records=" << r.records << " detail=\"" << escape_line(r.detail) << "\"\n";
      return fail(err, kExitThreshold, "audit", "audit chain verification failed: " + status_name(r.status));
    }
    if (*reset) {
      if (br_operator.empty()) return fail(err, kExitUsage, "usage", "--operator must be non-empty");
      StateSnapshot snap = load_state_snapshot(br_state);
      AgentSnapshot& agent = snap.find(br_agent);
      const double now = br_time.value_or(snap.time);
      MerkleAuditLog log = MerkleAuditLog::open(br_log);
      ResetResult r = reset_circuit_breaker(agent.state, br_operator, now, snap.escalation, agent.baseline, log);
      if (!r.performed) {
        err << "warning agent=" << br_agent << " message=\"" << escape_line(r.warning) << "\"\n";
        return kExitOk;
      }
      agent.state = std::move(r.state);
      write_report(br_state_out.empty() ? br_state : br_state_out, serialize_state_snapshot(snap));
      out << "reset agent=" << br_agent << " level=" << agent.state.current_level << " audit_root=" << to_hex(log.root())
          << "\n";
      return kExitOk;
    }
    if (*emit_cfg) {
      emit(out, emit_c.out, serialize_scenario_config(load_config(emit_c)));
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    return fail(err, kExitUsage, "config", e.what());
  } catch (const ParseError& e) {
    return fail(err, kExitUsage, "parse", e.what());
  } catch (const StorageError& e) {
    return fail(err, kExitUsage, "storage", e.what());
  } catch (const std::exception& e) {
    return fail(err, kExitUsage, "error", e.what());
  }
  return fail(err, kExitUsage, "usage", "no subcommand");
}

}  // namespace gaat::cli
