#include "gaat/reports.hpp"

#include <sstream>

#include "gaat/atomic_file.hpp"
#include "gaat/canonical.hpp"

namespace gaat {

using nlohmann::json;

namespace {

json optional_real(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json interval_json(const std::optional<Interval>& i) {
  if (!i) return nullptr;
  return json{{"low", i->low}, {"high", i->high}};
}

json tally_json(const KindTally& t) {
  json j{{"injected", t.injected}, {"prevented", t.prevented}};
  j["vpr"] = t.injected > 0 ? json(static_cast<double>(t.prevented) / t.injected) : json(nullptr);
  return j;
}

json kinds_json(const std::array<KindTally, 4>& kinds) {
  json j = json::object();
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    j[std::string(to_string(static_cast<ViolationType>(i)))] = tally_json(kinds[i]);
  }
  return j;
}

json run_json(const RunMetrics& r) {
  json tiers = json::object();
  for (std::size_t i = 0; i < r.tier_flows.size(); ++i) {
    tiers[std::string(to_string(static_cast<Tier>(i)))] = r.tier_flows[i];
  }
  return json{{"run", r.run_index},
              {"flows", r.flows},
              {"legit_flows", r.legit_flows},
              {"legit_enforced", r.legit_enforced},
              {"injected", r.injected()},
              {"prevented", r.prevented()},
              {"vpr", optional_real(r.vpr())},
              {"fpr", r.fpr()},
              {"avg_level", r.avg_level()},
              {"enforced_events", r.enforced_events},
              {"level_sum", r.level_sum},
              {"processed_events", r.processed_events},
              {"audit_records", r.audit_records},
              {"policy_evaluations", r.policy_evaluations},
              {"fail_closed_breaches", r.fail_closed_breaches},
              {"post_quarantine_completions", r.post_quarantine_completions},
              {"quarantined_agents", r.quarantined_agents},
              {"tier_flows", tiers},
              {"by_kind", kinds_json(r.kinds)},
              {"residency_chain", tally_json(r.residency_chain)},
              {"residency_direct", tally_json(r.residency_direct)}};
}

json config_echo(const ScenarioConfig& config) { return json::parse(serialize_scenario_config(config)); }

std::string csv_real(const std::optional<double>& v) { return v ? format_real(*v) : std::string("n/a"); }

std::string csv_interval(const std::optional<Interval>& i) {
  return i ? format_real(i->low) + "," + format_real(i->high) : std::string("n/a,n/a");
}

}  // namespace

json metrics_json(const MetricsReport& report) {
  json j{{"format", "gaat-metrics"},
         {"version", 1},
         {"config", config_echo(report.config)},
         {"vpr", optional_real(report.vpr)},
         {"ver", optional_real(report.ver)},
         {"fpr", report.fpr},
         {"avg_level", report.avg_level},
         {"ci",
          {{"level", report.config.bootstrap_level},
           {"resamples", report.config.bootstrap_resamples},
           {"vpr", interval_json(report.vpr_ci)},
           {"fpr", interval_json(report.fpr_ci)},
           {"avg_level", interval_json(report.avg_level_ci)}}},
         {"by_kind", kinds_json(report.kinds)},
         {"residency_chain", tally_json(report.residency_chain)},
         {"residency_direct", tally_json(report.residency_direct)},
         {"audit_totality", report.audit_totality},
         {"fail_closed_breaches", report.fail_closed_breaches},
         {"post_quarantine_completions", report.post_quarantine_completions}};
  json runs = json::array();
  for (const auto& r : report.runs) runs.push_back(run_json(r));
  j["runs"] = std::move(runs);
  if (report.latency) {
    const auto& l = *report.latency;
    j["latency_ms"] = {{"detection", {{"p50", l[0]}, {"p99", l[1]}}}, {"e2e", {{"p50", l[2]}, {"p99", l[3]}}}};
  }
  return j;
}

json sweep_json(const ScenarioConfig& config, const std::vector<SweepRow>& rows) {
  json out = json::array();
  for (const auto& row : rows) {
    json r{{"injection_rate", row.rate},
           {"vpr", optional_real(row.report.vpr)},
           {"fpr", row.report.fpr},
           {"avg_level", row.report.avg_level},
           {"vpr_ci", interval_json(row.report.vpr_ci)},
           {"fpr_ci", interval_json(row.report.fpr_ci)},
           {"avg_level_ci", interval_json(row.report.avg_level_ci)},
           {"by_kind", kinds_json(row.report.kinds)}};
    if (row.report.latency) {
      r["latency_ms"] = {{"detection_p50", (*row.report.latency)[0]}, {"detection_p99", (*row.report.latency)[1]},
                         {"e2e_p50", (*row.report.latency)[2]},       {"e2e_p99", (*row.report.latency)[3]}};
    }
    out.push_back(std::move(r));
  }
  return json{{"format", "gaat-sweep"}, {"version", 1}, {"config", config_echo(config)}, {"rows", std::move(out)}};
}

json security_json(const ScenarioConfig& config, const SecurityReport& report) {
  json details = json::object();
  for (const auto& [k, v] : report.details) details[k] = v;
  return json{{"format", "gaat-security"},
              {"version", 1},
              {"config", config_echo(config)},
              {"attack", std::string(to_string(report.attack))},
              {"fail_mode", report.fail_mode ? json(std::string(to_string(*report.fail_mode))) : json("PER_TIER")},
              {"seed", report.seed},
              {"attempts", report.attempts},
              {"detected", report.detected},
              {"bypassed", report.bypassed},
              {"detection_rate", report.detection_rate},
              {"bypass_rate", report.bypass_rate},
              {"availability_reduction", report.availability_reduction},
              {"details", std::move(details)}};
}

json theorem_json(std::uint64_t seed, int trials, const std::vector<TheoremReport>& reports) {
  json list = json::array();
  bool all = true;
  for (const auto& r : reports) {
    json failures = json::array();
    for (const auto& f : r.failures) failures.push_back({{"trial", f.trial}, {"seed", f.seed}, {"trace", f.trace}});
    json values = json::object();
    for (const auto& [k, v] : r.values) values[k] = v;
    list.push_back({{"theorem", r.theorem},
                    {"trials", r.trials},
                    {"successes", r.successes},
                    {"success_fraction", r.success_fraction},
                    {"values", std::move(values)},
                    {"failures", std::move(failures)},
                    {"passed", r.passed},
                    {"criterion", r.criterion}});
    all = all && r.passed;
  }
  return json{{"format", "gaat-theorems"}, {"version", 1},        {"seed", seed},
              {"trials", trials},          {"passed", all},       {"reports", std::move(list)}};
}

std::string render_json(const json& doc) { return doc.dump(2) + "\n"; }

std::string metrics_csv(const MetricsReport& report) {
  std::ostringstream o;
  o << "run,flows,injected,prevented,vpr,fpr,avg_level,legit_flows,legit_enforced,enforced_events,quarantined_agents";
  for (std::size_t i = 0; i < 4; ++i) {
    const auto k = to_string(static_cast<ViolationType>(i));
    o << "," << k << "_injected," << k << "_prevented";
  }
  o << "\n";
  auto kinds = [&](const std::array<KindTally, 4>& ks) {
    for (const auto& t : ks) o << "," << t.injected << "," << t.prevented;
  };
  int flows = 0, legit = 0, legit_enf = 0, enf = 0, quar = 0, inj = 0, prev = 0;
  for (const auto& r : report.runs) {
    o << r.run_index << "," << r.flows << "," << r.injected() << "," << r.prevented() << "," << csv_real(r.vpr())
      << "," << format_real(r.fpr()) << "," << format_real(r.avg_level()) << "," << r.legit_flows << ","
      << r.legit_enforced << "," << r.enforced_events << "," << r.quarantined_agents;
    kinds(r.kinds);
    o << "\n";
    flows += r.flows;
    legit += r.legit_flows;
    legit_enf += r.legit_enforced;
    enf += r.enforced_events;
    quar += r.quarantined_agents;
    inj += r.injected();
    prev += r.prevented();
  }
  o << "all," << flows << "," << inj << "," << prev << "," << csv_real(report.vpr) << "," << format_real(report.fpr)
    << "," << format_real(report.avg_level) << "," << legit << "," << legit_enf << "," << enf << "," << quar;
  kinds(report.kinds);
  o << "\n";
  return o.str();
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream o;
  o << "injection_rate,vpr,vpr_low,vpr_high,fpr,fpr_low,fpr_high,avg_level,avg_level_low,avg_level_high\n";
  for (const auto& r : rows) {
    o << format_real(r.rate) << "," << csv_real(r.report.vpr) << "," << csv_interval(r.report.vpr_ci) << ","
      << format_real(r.report.fpr) << "," << csv_interval(r.report.fpr_ci) << "," << format_real(r.report.avg_level)
      << "," << csv_interval(r.report.avg_level_ci) << "\n";
  }
  return o.str();
}

std::string security_csv(const SecurityReport& report) {
  std::ostringstream o;
  o << "attack,fail_mode,seed,attempts,detected,bypassed,detection_rate,bypass_rate,availability_reduction\n";
  o << to_string(report.attack) << "," << (report.fail_mode ? to_string(*report.fail_mode) : "PER_TIER") << ","
    << report.seed << "," << report.attempts << "," << report.detected << "," << report.bypassed << ","
    << format_real(report.detection_rate) << "," << format_real(report.bypass_rate) << ","
    << format_real(report.availability_reduction) << "\n";
  return o.str();
}

std::string theorem_csv(const std::vector<TheoremReport>& reports) {
  std::ostringstream o;
  o << "theorem,trials,successes,success_fraction,passed\n";
  for (const auto& r : reports) {
    o << r.theorem << "," << r.trials << "," << r.successes << "," << format_real(r.success_fraction) << ","
      << (r.passed ? "true" : "false") << "\n";
  }
  return o.str();
}

void write_report(const std::filesystem::path& path, const std::string& contents) {
  write_file_atomic(path, contents);
}

}  // namespace gaat
