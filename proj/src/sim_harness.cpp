#include "gaat/sim_harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gaat/canonical.hpp"
#include "gaat/stats.hpp"

namespace gaat {

namespace {

using namespace scenario;

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

/// One of the other classes, chosen by u in [0,1).
Classification flip_class(Classification c, double u) {
  const auto n = enum_count<Classification>();
  const auto step = 1 + std::min(n - 2, static_cast<std::size_t>(u * static_cast<double>(n - 1)));
  return static_cast<Classification>((static_cast<std::size_t>(c) + step) % n);
}

struct FlowDraws {
  Jurisdiction jurisdiction = Jurisdiction::Eu;
  std::int64_t quantity = 1;
  double amount = 0.0;
  double disparate_legit = 0.0;
  double disparate_injected = 0.0;
  std::size_t unauthorized_hop = 0;
  std::array<bool, kHops> noisy{};
  std::array<double, kHops> noise_pick{};
};

/// Fixed number of draws per flow so one flow's attributes never shift another's.
FlowDraws draw_flow(Rng& rng, double epsilon) {
  FlowDraws d;
  d.jurisdiction = rng.bernoulli(0.5) ? Jurisdiction::Eu : Jurisdiction::Us;
  d.quantity = 1 + static_cast<std::int64_t>(rng.index(5));
  d.amount = std::round(rng.uniform(5.0, 500.0) * 100.0) / 100.0;
  d.disparate_legit = 0.15 * rng.uniform01();
  d.disparate_injected = 0.5 - 0.35 * rng.uniform01();
  d.unauthorized_hop = rng.index(kHops);
  for (std::size_t h = 0; h < kHops; ++h) {
    d.noisy[h] = rng.bernoulli(epsilon);
    d.noise_pick[h] = rng.uniform01();
  }
  return d;
}

GovernanceTelemetryEvent make_hop(double t, const AgentId& src, const AgentId& dst, std::string op,
                                  std::vector<AgentId> lineage, std::size_t flow, std::int64_t hop) {
  GovernanceTelemetryEvent e;
  e.timestamp = t;
  e.source = src;
  e.receiver = dst;
  e.operation = std::move(op);
  e.governance.lineage = std::move(lineage);
  e.context["flow_id"] = static_cast<std::int64_t>(flow);
  e.context["hop"] = hop;
  return e;
}

void set_meta(GovernanceTelemetryEvent& e, Classification c, Jurisdiction j, Sensitivity s) {
  e.governance.classification = c;
  e.governance.jurisdiction = j;
  e.governance.sensitivity = s;
}

Flow build_flow(const ScenarioConfig& cfg, std::size_t index, Tier tier, std::optional<ViolationType> kind,
                std::optional<ResidencyShape> shape, const FlowDraws& d) {
  Flow f;
  f.index = index;
  f.tier = tier;
  f.injected = kind;
  f.residency_shape = shape;
  const double t0 = static_cast<double>(index) * cfg.flow_interval;
  const double dt = cfg.hop_spacing;

  auto& hops = f.hops;
  hops.push_back(make_hop(t0, kOrder, kInventory, "reserve_inventory", {kOrder}, index, 0));
  hops.push_back(make_hop(t0 + dt, kOrder, kPayment, "request_payment", {kOrder}, index, 1));
  hops.push_back(make_hop(t0 + 2 * dt, kPayment, kShipping, "schedule_shipment", {kOrder, kPayment}, index, 2));
  hops.push_back(
      make_hop(t0 + 3 * dt, kShipping, kAnalytics, "emit_analytics", {kOrder, kPayment, kShipping}, index, 3));
  hops[0].context["quantity"] = d.quantity;
  hops[1].context["amount"] = d.amount;
  hops[1].context["consent_flag"] = std::int64_t{1};
  hops[2].context["disparate_impact"] = d.disparate_legit;

  switch (tier) {
    case Tier::High:
      // EU customer data; PII is stripped before anything leaves the EU hosts.
      for (std::size_t h = 0; h < 2; ++h) set_meta(hops[h], Classification::Pii, Jurisdiction::Eu, Sensitivity::High);
      for (std::size_t h = 2; h < 4; ++h) {
        set_meta(hops[h], Classification::Operational, Jurisdiction::Eu, Sensitivity::Low);
      }
      break;
    case Tier::Medium:
      for (std::size_t h = 0; h < 3; ++h) {
        set_meta(hops[h], Classification::Financial, d.jurisdiction, Sensitivity::Medium);
      }
      set_meta(hops[3], Classification::Operational, d.jurisdiction, Sensitivity::Low);
      break;
    case Tier::Low:
      for (auto& h : hops) set_meta(h, Classification::Operational, d.jurisdiction, Sensitivity::Low);
      break;
  }

  if (kind) {
    switch (*kind) {
      case ViolationType::ConsentMissing:
        hops[1].context["consent_flag"] = std::int64_t{0};
        break;
      case ViolationType::BiasThreshold:
        hops[2].context["disparate_impact"] = d.disparate_injected;
        break;
      case ViolationType::DataResidency:
        set_meta(hops[3], Classification::Pii, Jurisdiction::Eu, Sensitivity::High);
        if (shape == ResidencyShape::Direct) hops[3].context["destination_jurisdiction"] = std::string("US");
        break;
      case ViolationType::UnauthorizedAccess:
        hops[d.unauthorized_hop].operation = std::string(kUnauthorizedOperation);
        break;
    }
  }

  for (std::size_t h = 0; h < kHops; ++h) {
    if (!d.noisy[h]) continue;
    hops[h].governance.classification = flip_class(hops[h].governance.classification, d.noise_pick[h]);
  }
  return f;
}

}  // namespace

MultiAgentSystem scenario_system(const ScenarioConfig& config) {
  MultiAgentSystem s;
  s.add_agent(kOrder, {"reserve_inventory", "request_payment", "route_order"}, 1.0, Jurisdiction::Eu);
  s.add_agent(kInventory, {"report_stock"}, 1.0, Jurisdiction::Eu);
  s.add_agent(kPayment, {"schedule_shipment", "issue_refund"}, 1.0, Jurisdiction::Eu);
  s.add_agent(kShipping, {"emit_analytics", "track_shipment"}, 1.0, Jurisdiction::Us);
  s.add_agent(kAnalytics, {"publish_report"}, 1.0, Jurisdiction::Us);
  const AgentId sink(config.compliance_sink);
  if (!s.contains(sink)) s.add_agent(sink, {"archive_record"}, 1.0, Jurisdiction::Eu);
  s.add_channel(kOrder, kInventory, "reserve");
  s.add_channel(kOrder, kPayment, "payment");
  s.add_channel(kPayment, kShipping, "shipment");
  s.add_channel(kShipping, kAnalytics, "analytics");
  for (const auto& a : {kOrder, kPayment, kShipping}) s.add_channel(a, sink, "redirect");
  return s;
}

std::vector<int> apportion(int total, std::span<const double> weights, std::size_t rotate) {
  if (total < 0) throw ConfigError("cannot apportion a negative total");
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (weights.empty() || !(wsum > 0.0)) throw ConfigError("apportion needs positive weights");
  const std::size_t n = weights.size();
  std::vector<int> out(n);
  std::vector<double> rem(n);
  int used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double exact = total * weights[i] / wsum;
    out[i] = static_cast<int>(std::floor(exact));
    rem[i] = exact - out[i];
    used += out[i];
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = (i + rotate) % n;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b] + 1e-12; });
  for (std::size_t i = 0; used < total; ++i, ++used) ++out[order[i % n]];
  return out;
}

RunStream generate_run(const ScenarioConfig& config, std::size_t run_index) {
  config.validate();
  RunStream stream;
  stream.run_index = run_index;
  Rng rng(derive_seed(config.seed, run_index));
  const int n = config.flows_per_run;
  const auto nz = static_cast<std::size_t>(n);

  const auto tier_counts = apportion(n, config.tier_mix);
  std::vector<Tier> tiers;
  for (std::size_t t = 0; t < 3; ++t) tiers.insert(tiers.end(), static_cast<std::size_t>(tier_counts[t]), static_cast<Tier>(t));
  shuffle(tiers, rng);

  const int injections = std::min(n, static_cast<int>(std::llround(config.injection_rate * n)));
  std::vector<std::optional<ViolationType>> kinds(nz);
  std::vector<std::optional<ResidencyShape>> shapes(nz);
  if (injections > 0) {
    const auto kind_counts = apportion(injections, config.injection_weights, run_index);
    std::vector<std::size_t> high;
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < nz; ++i) (tiers[i] == Tier::High ? high : rest).push_back(i);
    shuffle(high, rng);
    shuffle(rest, rng);
    const auto residency = static_cast<std::size_t>(kind_counts[static_cast<std::size_t>(ViolationType::DataResidency)]);
    std::vector<std::size_t> residency_flows(high.begin(), high.begin() + static_cast<std::ptrdiff_t>(std::min(residency, high.size())));
    std::vector<std::size_t> pool(high.begin() + static_cast<std::ptrdiff_t>(residency_flows.size()), high.end());
    pool.insert(pool.end(), rest.begin(), rest.end());
    shuffle(pool, rng);
    std::size_t next = 0;
    while (residency_flows.size() < residency) residency_flows.push_back(pool[next++]);
    std::sort(residency_flows.begin(), residency_flows.end());
    for (std::size_t i = 0; i < residency_flows.size(); ++i) {
      kinds[residency_flows[i]] = ViolationType::DataResidency;
      shapes[residency_flows[i]] = ((i + run_index) % 2 == 0) ? ResidencyShape::Direct : ResidencyShape::Chain;
    }
    std::vector<ViolationType> others;
    for (std::size_t k = 0; k < 4; ++k) {
      if (static_cast<ViolationType>(k) == ViolationType::DataResidency) continue;
      others.insert(others.end(), static_cast<std::size_t>(kind_counts[k]), static_cast<ViolationType>(k));
    }
    shuffle(others, rng);
    for (auto k : others) kinds[pool[next++]] = k;
  }

  stream.flows.reserve(nz);
  for (std::size_t i = 0; i < nz; ++i) {
    const FlowDraws d = draw_flow(rng, config.noise_epsilon);
    stream.flows.push_back(build_flow(config, i, tiers[i], kinds[i], shapes[i], d));
  }

  DeterministicRandom nonces(derive_seed(config.seed, run_index), "gaat/sim/nonce");
  for (auto& f : stream.flows) {
    for (auto& e : f.hops) e.nonce = nonces.next_u64();
  }
  return stream;
}

Digest stream_digest(const RunStream& stream) {
  Sha256 h;
  for (const auto& f : stream.flows) {
    for (const auto& e : f.hops) {
      const Bytes b = canonical_serialize(e);
      h.update(b);
    }
  }
  return h.finish();
}

RunContext::RunContext(const ScenarioConfig& config, const RulePack& pack, std::size_t run_index,
                       const RunOptions& options) {
  (void)run_index;
  MultiAgentSystem system = scenario_system(config);
  KeyRegistry keys;
  for (const auto& a : system.agents()) {
    auto signer = EcdsaP256Signer::generate();
    keys.register_key(a, signer->verification_key());
    signers_.emplace(a, std::move(signer));
  }
  BusConfig bc;
  bc.escalation = config.escalation();
  bc.tiers = config.tiers();
  if (options.fail_mode_override) {
    for (std::size_t t = 0; t < 3; ++t) bc.tiers.set_fail_mode(static_cast<Tier>(t), *options.fail_mode_override);
  }
  bc.replay = config.replay;
  bc.mode = options.mode_override.value_or(config.mode);
  bc.compliance_sink = AgentId(config.compliance_sink);
  MerkleAuditLog log = options.audit_path ? MerkleAuditLog::create(*options.audit_path) : MerkleAuditLog();
  bus_ = std::make_unique<EnforcementBus>(std::move(bc), std::move(system), pack, std::move(keys), std::move(log));
}

GovernanceTelemetryEvent RunContext::sign(GovernanceTelemetryEvent event) const {
  auto it = signers_.find(event.source);
  if (it == signers_.end()) return event;
  return sign_event(std::move(event), it->second.get());
}

EnforcementOutcome RunContext::submit(const GovernanceTelemetryEvent& signed_event, double now) {
  return bus_->process_event(signed_event, now);
}

FlowResult RunContext::play(const Flow& flow, const EventMutator& mutate) {
  FlowResult r;
  bool flagged = false;
  for (std::size_t h = 0; h < flow.hops.size(); ++h) {
    GovernanceTelemetryEvent ev = flow.hops[h];
    if (flagged) ev.context["governance_flag"] = std::int64_t{1};
    ev = sign(std::move(ev));
    if (mutate) mutate(ev, flow.index, h);
    auto out = bus_->process_event(ev, ev.timestamp);
    r.submitted.push_back(ev);
    const bool stop = !out.operation_completed || out.redirected;
    flagged = flagged || out.flagged;
    if (!stop && h + 1 == flow.hops.size()) r.terminal_completed = true;
    r.outcomes.push_back(std::move(out));
    if (stop) break;
  }
  return r;
}

int RunMetrics::injected() const {
  int s = 0;
  for (const auto& k : kinds) s += k.injected;
  return s;
}

int RunMetrics::prevented() const {
  int s = 0;
  for (const auto& k : kinds) s += k.prevented;
  return s;
}

std::optional<double> RunMetrics::vpr() const {
  if (injected() == 0) return std::nullopt;
  return static_cast<double>(prevented()) / injected();
}

double RunMetrics::fpr() const { return legit_flows == 0 ? 0.0 : static_cast<double>(legit_enforced) / legit_flows; }

double RunMetrics::avg_level() const {
  return enforced_events == 0 ? 0.0 : static_cast<double>(level_sum) / enforced_events;
}

void accumulate(RunMetrics& m, const Flow& flow, const FlowResult& result, const EnforcementBus& bus) {
  ++m.flows;
  ++m.tier_flows[static_cast<std::size_t>(flow.tier)];
  bool enforced = false;
  for (std::size_t i = 0; i < result.outcomes.size(); ++i) {
    const auto& o = result.outcomes[i];
    const int level = static_cast<int>(o.applied_level);
    if (o.decided_action && o.decided_action->action != Action::Allow) {
      ++m.enforced_events;
      m.level_sum += level;
    }
    if (level >= 2 || !o.operation_completed) enforced = true;
    if (o.verification != Verification::True && o.operation_completed &&
        bus.config().tiers.fail_mode(o.tier) == FailMode::FailClosed) {
      ++m.fail_closed_breaches;
    }
    m.latency_detection_ms.push_back(o.latency_detection_ms);
    m.latency_e2e_ms.push_back(o.latency_e2e_ms);
  }
  if (flow.injected) {
    auto& k = m.kinds[static_cast<std::size_t>(*flow.injected)];
    ++k.injected;
    const bool prevented = !result.terminal_completed;
    if (prevented) ++k.prevented;
    if (flow.residency_shape) {
      auto& s = *flow.residency_shape == ResidencyShape::Chain ? m.residency_chain : m.residency_direct;
      ++s.injected;
      if (prevented) ++s.prevented;
    }
  } else {
    ++m.legit_flows;
    if (enforced) ++m.legit_enforced;
  }
}

RulePack scenario_rule_pack(const ScenarioConfig& config) {
  return config.rule_pack.empty() ? default_rule_pack() : load_rule_pack(config.rule_pack);
}

RunMetrics execute_run(const ScenarioConfig& config, const RulePack& pack, std::size_t run_index,
                       const RunOptions& options) {
  const RunStream stream = generate_run(config, run_index);
  RunContext ctx(config, pack, run_index, options);
  RunMetrics m;
  m.run_index = run_index;
  for (const auto& flow : stream.flows) {
    std::array<bool, kHops> was_quarantined{};
    for (std::size_t h = 0; h < flow.hops.size(); ++h) {
      const auto& src = flow.hops[h].source;
      was_quarantined[h] = ctx.bus().escalation().knows(src) && ctx.bus().escalation().state(src).quarantined;
    }
    const FlowResult r = ctx.play(flow);
    for (std::size_t h = 0; h < r.outcomes.size(); ++h) {
      if (was_quarantined[h] && r.outcomes[h].operation_completed) ++m.post_quarantine_completions;
    }
    accumulate(m, flow, r, ctx.bus());
  }
  const auto& bus = ctx.bus();
  m.processed_events = bus.counters().processed;
  m.audit_records = bus.audit().size();
  m.policy_evaluations = bus.counters().policy_evaluations;
  for (const auto& a : bus.escalation().agents()) {
    if (bus.escalation().state(a).quarantined) ++m.quarantined_agents;
  }
  if (options.on_run_end) options.on_run_end(run_index, bus);
  return m;
}

MetricsReport summarize(const ScenarioConfig& config, std::vector<RunMetrics> runs, bool with_latency) {
  MetricsReport rep;
  rep.config = config;
  int injected = 0;
  int prevented = 0;
  int legit = 0;
  int legit_enforced = 0;
  int enforced = 0;
  int level_sum = 0;
  std::vector<double> vpr_num, vpr_den, fpr_num, fpr_den, lvl_num, lvl_den;
  std::vector<double> det, e2e;
  for (const auto& r : runs) {
    for (std::size_t k = 0; k < 4; ++k) {
      rep.kinds[k].injected += r.kinds[k].injected;
      rep.kinds[k].prevented += r.kinds[k].prevented;
    }
    rep.residency_chain.injected += r.residency_chain.injected;
    rep.residency_chain.prevented += r.residency_chain.prevented;
    rep.residency_direct.injected += r.residency_direct.injected;
    rep.residency_direct.prevented += r.residency_direct.prevented;
    injected += r.injected();
    prevented += r.prevented();
    legit += r.legit_flows;
    legit_enforced += r.legit_enforced;
    enforced += r.enforced_events;
    level_sum += r.level_sum;
    if (r.injected() > 0) {
      vpr_num.push_back(r.prevented());
      vpr_den.push_back(r.injected());
    }
    fpr_num.push_back(r.legit_enforced);
    fpr_den.push_back(r.legit_flows);
    lvl_num.push_back(r.level_sum);
    lvl_den.push_back(r.enforced_events);
    if (r.audit_records != r.processed_events) rep.audit_totality = false;
    rep.fail_closed_breaches += r.fail_closed_breaches;
    rep.post_quarantine_completions += r.post_quarantine_completions;
    if (with_latency) {
      det.insert(det.end(), r.latency_detection_ms.begin(), r.latency_detection_ms.end());
      e2e.insert(e2e.end(), r.latency_e2e_ms.begin(), r.latency_e2e_ms.end());
    }
  }
  if (injected > 0) {
    rep.vpr = static_cast<double>(prevented) / injected;
    rep.ver = 1.0 - *rep.vpr;
  }
  rep.fpr = legit == 0 ? 0.0 : static_cast<double>(legit_enforced) / legit;
  rep.avg_level = enforced == 0 ? 0.0 : static_cast<double>(level_sum) / enforced;

  const int b = config.bootstrap_resamples;
  const double lv = config.bootstrap_level;
  auto ci = [&](const std::vector<double>& num, const std::vector<double>& den, std::uint64_t tag) {
    std::optional<Interval> out;
    if (num.size() >= 2) {
      auto [lo, hi] = bootstrap_ratio_ci(num, den, b, lv, derive_seed(config.seed, tag));
      out = Interval{lo, hi};
    }
    return out;
  };
  rep.vpr_ci = ci(vpr_num, vpr_den, 0xC1'0001);
  rep.fpr_ci = ci(fpr_num, fpr_den, 0xC1'0002);
  if (enforced > 0) rep.avg_level_ci = ci(lvl_num, lvl_den, 0xC1'0003);
  if (with_latency && !det.empty()) {
    rep.latency = std::array<double, 4>{percentile_linear(det, 0.5), percentile_linear(det, 0.99),
                                        percentile_linear(e2e, 0.5), percentile_linear(e2e, 0.99)};
  }
  rep.runs = std::move(runs);
  return rep;
}

MetricsReport run_scenario(const ScenarioConfig& config, bool with_latency, const RunOptions& options) {
  config.validate();
  const RulePack pack = scenario_rule_pack(config);
  std::vector<RunMetrics> runs;
  runs.reserve(static_cast<std::size_t>(config.runs));
  for (int r = 0; r < config.runs; ++r) {
    RunOptions opts = options;
    if (options.audit_path) {
      auto p = *options.audit_path;
      p += "." + std::to_string(r);
      opts.audit_path = p;
    }
    runs.push_back(execute_run(config, pack, static_cast<std::size_t>(r), opts));
    if (!with_latency) {
      runs.back().latency_detection_ms.clear();
      runs.back().latency_e2e_ms.clear();
    }
  }
  return summarize(config, std::move(runs), with_latency);
}

std::vector<SweepRow> sensitivity_sweep(const ScenarioConfig& config, const std::vector<double>& rates,
                                        bool with_latency) {
  std::vector<SweepRow> rows;
  for (double rate : rates) {
    ScenarioConfig c = config;
    c.injection_rate = rate;
    rows.push_back(SweepRow{rate, run_scenario(c, with_latency)});
  }
  return rows;
}

}  // namespace gaat
