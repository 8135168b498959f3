#include "gaat/scenario_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace gaat {

namespace {

using nlohmann::json;

constexpr std::string_view kFormat = "gaat-scenario";

/// Walks one JSON object, rejecting keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + " must be an object");
  }
  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + where(key) + "'");
    }
  }
  ObjectReader(const ObjectReader&) = delete;
  ObjectReader& operator=(const ObjectReader&) = delete;

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number()) throw ConfigError(where(key) + " must be a number");
      out = v->get<double>();
    }
  }
  void integer(const std::string& key, int& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(where(key) + " must be an integer");
      const auto x = v->get<std::int64_t>();
      if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(where(key) + " is out of range");
      out = static_cast<int>(x);
    }
  }
  void u64(const std::string& key, std::uint64_t& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(where(key) + " must be a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (const auto* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(where(key) + " must be a boolean");
      out = v->get<bool>();
    }
  }
  void string(const std::string& key, std::string& out) {
    if (const auto* v = find(key)) {
      if (!v->is_string()) throw ConfigError(where(key) + " must be a string");
      out = v->get<std::string>();
    }
  }
  template <class E>
  void enumeration(const std::string& key, E& out) {
    std::string s;
    if (find(key) == nullptr) return;
    string(key, s);
    auto e = try_parse_enum<E>(s);
    if (!e) throw ConfigError(where(key) + ": invalid value '" + s + "'");
    out = *e;
  }

  [[nodiscard]] std::string where(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class E, std::size_t N, class F>
void read_enum_map(ObjectReader& parent, const std::string& key, F&& each) {
  const auto* v = parent.find(key);
  if (v == nullptr) return;
  ObjectReader r(*v, parent.where(key));
  for (std::size_t i = 0; i < N; ++i) each(r, std::string(to_string(static_cast<E>(i))), i);
}

ScenarioConfig from_json(const json& doc) {
  ScenarioConfig c;
  ObjectReader root(doc, "");
  std::string format;
  if (root.find("format") == nullptr) throw ConfigError("scenario config is missing 'format'");
  root.string("format", format);
  if (format != kFormat) throw ConfigError("scenario config format must be '" + std::string(kFormat) + "'");
  int version = 0;
  if (root.find("version") == nullptr) throw ConfigError("scenario config is missing 'version'");
  root.integer("version", version);
  if (version != ScenarioConfig::kVersion) {
    throw ConfigError("unsupported scenario config version " + std::to_string(version));
  }

  root.u64("seed", c.seed);
  root.integer("flows_per_run", c.flows_per_run);
  root.integer("runs", c.runs);
  root.number("injection_rate", c.injection_rate);
  read_enum_map<ViolationType, 4>(root, "injection_weights",
                                  [&](ObjectReader& r, const std::string& k, std::size_t i) {
                                    r.number(k, c.injection_weights[i]);
                                  });
  root.number("noise_epsilon", c.noise_epsilon);
  root.enumeration("mode", c.mode);
  read_enum_map<Tier, 3>(root, "tier_mix", [&](ObjectReader& r, const std::string& k, std::size_t i) {
    r.number(k, c.tier_mix[i]);
  });
  read_enum_map<Tier, 3>(root, "fail_modes", [&](ObjectReader& r, const std::string& k, std::size_t i) {
    r.enumeration(k, c.fail_modes[i]);
  });
  if (const auto* v = root.find("escalation")) {
    ObjectReader r(*v, "escalation");
    r.number("window_w", c.window_w);
    r.integer("k", c.k);
    r.boolean("circuit_breaker", c.circuit_breaker);
  }
  if (const auto* v = root.find("timing")) {
    ObjectReader r(*v, "timing");
    r.number("flow_interval", c.flow_interval);
    r.number("hop_spacing", c.hop_spacing);
  }
  if (const auto* v = root.find("replay_filter")) {
    ObjectReader r(*v, "replay_filter");
    r.u64("capacity", c.replay.capacity);
    r.number("fp_rate", c.replay.fp_rate);
    r.number("window_seconds", c.replay.window_seconds);
  }
  if (const auto* v = root.find("bootstrap")) {
    ObjectReader r(*v, "bootstrap");
    r.integer("resamples", c.bootstrap_resamples);
    r.number("level", c.bootstrap_level);
  }
  root.string("compliance_sink", c.compliance_sink);
  root.string("rule_pack", c.rule_pack);
  if (const auto* v = root.find("attack")) {
    ObjectReader a(*v, "attack");
    if (const auto* f = a.find("forgery")) {
      ObjectReader r(*f, "attack.forgery");
      r.number("fraction", c.forgery.fraction);
    }
    if (const auto* f = a.find("replay")) {
      ObjectReader r(*f, "attack.replay");
      r.integer("replays_per_run", c.replay_attack.replays_per_run);
      r.number("expired_fraction", c.replay_attack.expired_fraction);
    }
    if (const auto* f = a.find("omission")) {
      ObjectReader r(*f, "attack.omission");
      r.integer("train_traces", c.omission.train_traces);
      r.integer("heldout_traces", c.omission.heldout_traces);
      r.integer("max_iters", c.omission.max_iters);
      r.number("tol", c.omission.tol);
      r.number("quantile", c.omission.quantile);
      r.integer("restarts", c.omission.restarts);
    }
  }
  return c;
}

json to_json(const ScenarioConfig& c) {
  json j;
  j["format"] = kFormat;
  j["version"] = ScenarioConfig::kVersion;
  j["seed"] = c.seed;
  j["flows_per_run"] = c.flows_per_run;
  j["runs"] = c.runs;
  j["injection_rate"] = c.injection_rate;
  for (std::size_t i = 0; i < 4; ++i) {
    j["injection_weights"][std::string(to_string(static_cast<ViolationType>(i)))] = c.injection_weights[i];
  }
  j["noise_epsilon"] = c.noise_epsilon;
  j["mode"] = to_string(c.mode);
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string t(to_string(static_cast<Tier>(i)));
    j["tier_mix"][t] = c.tier_mix[i];
    j["fail_modes"][t] = to_string(c.fail_modes[i]);
  }
  j["escalation"] = {{"window_w", c.window_w}, {"k", c.k}, {"circuit_breaker", c.circuit_breaker}};
  j["timing"] = {{"flow_interval", c.flow_interval}, {"hop_spacing", c.hop_spacing}};
  j["replay_filter"] = {{"capacity", c.replay.capacity},
                        {"fp_rate", c.replay.fp_rate},
                        {"window_seconds", c.replay.window_seconds}};
  j["bootstrap"] = {{"resamples", c.bootstrap_resamples}, {"level", c.bootstrap_level}};
  j["compliance_sink"] = c.compliance_sink;
  j["rule_pack"] = c.rule_pack;
  j["attack"]["forgery"] = {{"fraction", c.forgery.fraction}};
  j["attack"]["replay"] = {{"replays_per_run", c.replay_attack.replays_per_run},
                           {"expired_fraction", c.replay_attack.expired_fraction}};
  j["attack"]["omission"] = {{"train_traces", c.omission.train_traces},
                             {"heldout_traces", c.omission.heldout_traces},
                             {"max_iters", c.omission.max_iters},
                             {"tol", c.omission.tol},
                             {"quantile", c.omission.quantile},
                             {"restarts", c.omission.restarts}};
  return j;
}

bool unit_interval(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

void ScenarioConfig::validate() const {
  if (flows_per_run < 1) throw ConfigError("flows_per_run must be >= 1");
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (!unit_interval(injection_rate)) throw ConfigError("injection_rate must lie in [0,1]");
  if (!unit_interval(noise_epsilon)) throw ConfigError("noise_epsilon must lie in [0,1]");
  double wsum = 0.0;
  for (double w : injection_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("injection_weights must be non-negative");
    wsum += w;
  }
  if (!(wsum > 0.0)) throw ConfigError("injection_weights must not all be zero");
  double tsum = 0.0;
  for (double t : tier_mix) {
    if (!unit_interval(t)) throw ConfigError("tier_mix entries must lie in [0,1]");
    tsum += t;
  }
  if (std::abs(tsum - 1.0) > 1e-9) throw ConfigError("tier_mix must sum to 1");
  escalation().validate();
  if (!(flow_interval > 0.0) || !(hop_spacing > 0.0) || hop_spacing * 3.0 >= flow_interval) {
    throw ConfigError("timing needs 0 < 3 * hop_spacing < flow_interval");
  }
  if (replay.capacity == 0 || !(replay.fp_rate > 0.0 && replay.fp_rate < 1.0) || !(replay.window_seconds > 0.0)) {
    throw ConfigError("replay_filter needs capacity > 0, fp_rate in (0,1) and window_seconds > 0");
  }
  if (bootstrap_resamples < 1 || !(bootstrap_level > 0.0 && bootstrap_level < 1.0)) {
    throw ConfigError("bootstrap needs resamples >= 1 and level in (0,1)");
  }
  if (compliance_sink.empty()) throw ConfigError("compliance_sink must be set");
  if (!unit_interval(forgery.fraction)) throw ConfigError("attack.forgery.fraction must lie in [0,1]");
  if (replay_attack.replays_per_run < 0 || !unit_interval(replay_attack.expired_fraction)) {
    throw ConfigError("attack.replay needs replays_per_run >= 0 and expired_fraction in [0,1]");
  }
  if (omission.train_traces < 20 || omission.heldout_traces < 1 || omission.max_iters < 1 || omission.restarts < 1 ||
      !(omission.tol >= 0.0) || !(omission.quantile > 0.0 && omission.quantile < 1.0)) {
    throw ConfigError("attack.omission parameters out of range");
  }
}

EscalationConfig ScenarioConfig::escalation() const {
  auto e = EscalationConfig::with_defaults(window_w, k);
  e.breaker_enabled = circuit_breaker;
  return e;
}

TierConfig ScenarioConfig::tiers() const {
  auto t = TierConfig::defaults();
  for (std::size_t i = 0; i < 3; ++i) t.set_fail_mode(static_cast<Tier>(i), fail_modes[i]);
  return t;
}

void apply_override(std::string& json_text, std::string_view override_expr) {
  const auto eq = override_expr.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(override_expr) + "' must look like key.path=value");
  }
  const std::string path(override_expr.substr(0, eq));
  const std::string raw(override_expr.substr(eq + 1));
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario config is not valid JSON: ") + e.what());
  }
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override path '" + path + "' has an empty segment");
    if (!node->is_object()) throw ConfigError("override path '" + path + "' runs through a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
  json_text = doc.dump();
}

ScenarioConfig parse_scenario_config(std::string_view text, const std::vector<std::string>& overrides) {
  std::string working(text);
  for (const auto& o : overrides) apply_override(working, o);
  json doc;
  try {
    doc = json::parse(working);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario config is not valid JSON: ") + e.what());
  }
  ScenarioConfig c = from_json(doc);
  c.validate();
  return c;
}

ScenarioConfig load_scenario_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read scenario config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_config(buf.str(), overrides);
}

std::string serialize_scenario_config(const ScenarioConfig& config) { return to_json(config).dump(2) + "\n"; }

}  // namespace gaat
