#include "gaat/policy_rules.hpp"

#include <algorithm>
#include <cmath>

namespace gaat {

RuleEnvironment RuleEnvironment::from_system(const MultiAgentSystem& system) {
  RuleEnvironment env;
  for (const auto& id : system.agents()) {
    env.authorized.emplace(id, system.capabilities(id));
    env.hosting.emplace(id, system.jurisdiction(id));
  }
  return env;
}

namespace {

std::optional<Jurisdiction> hosting_of(const RuleEnvironment& env, const AgentId& id) {
  auto it = env.hosting.find(id);
  if (it == env.hosting.end()) return std::nullopt;
  return it->second;
}

Match to_match(bool b) { return b ? Match::Yes : Match::No; }

}  // namespace

Match lineage_cross_check(const GovernanceTelemetryEvent& event, std::string_view origin, const RuleEnvironment& env) {
  const auto& lineage = event.governance.lineage;
  if (lineage.empty()) return Match::No;
  const auto origin_j = hosting_of(env, lineage.front());
  if (!origin_j) return Match::Unknown;
  if (origin != "*") {
    const auto wanted = try_parse_enum<Jurisdiction>(origin);
    if (!wanted || *wanted != *origin_j) return Match::No;
  }
  bool unknown = false;
  auto visit = [&](const AgentId& id) {
    const auto j = hosting_of(env, id);
    if (!j) {
      unknown = true;
      return false;
    }
    return *j != *origin_j;
  };
  for (std::size_t i = 1; i < lineage.size(); ++i) {
    if (visit(lineage[i])) return Match::Yes;
  }
  if (visit(event.source)) return Match::Yes;
  if (auto it = event.context.find("destination_jurisdiction"); it != event.context.end()) {
    if (const auto* s = std::get_if<std::string>(&it->second)) {
      const auto dest = try_parse_enum<Jurisdiction>(*s);
      if (!dest) {
        unknown = true;
      } else if (*dest != *origin_j) {
        return Match::Yes;
      }
    } else {
      unknown = true;
    }
  }
  return unknown ? Match::Unknown : Match::No;
}

Match lineage_cross_check(const GovernanceTelemetryEvent& event, const GovernanceRule& rule,
                          const RuleEnvironment& env) {
  for (const auto& c : rule.conditions) {
    if (c.op == RuleOperator::ChainCrosses) {
      return lineage_cross_check(event, std::get<std::string>(c.value), env);
    }
  }
  return Match::No;
}

namespace {

enum class FieldKind {
  Classification,
  Jurisdiction,
  Sensitivity,
  Verified,
  Lineage,
  LineageLength,
  ChainCrossing,
  Source,
  Receiver,
  Operation,
  Authorized,
  Timestamp,
  Context,
};

struct FieldRef {
  FieldKind kind;
  std::string context_key;
};

constexpr std::string_view kContextPrefix = "context.";

FieldRef resolve_field(const std::string& path) {
  static const std::map<std::string, FieldKind, std::less<>> fixed = {
      {"governance.classification", FieldKind::Classification},
      {"governance.jurisdiction", FieldKind::Jurisdiction},
      {"governance.sensitivity", FieldKind::Sensitivity},
      {"governance.verified", FieldKind::Verified},
      {"governance.lineage", FieldKind::Lineage},
      {"governance.lineage_length", FieldKind::LineageLength},
      {"lineage.any_jurisdiction_crossing", FieldKind::ChainCrossing},
      {"source", FieldKind::Source},
      {"receiver", FieldKind::Receiver},
      {"operation", FieldKind::Operation},
      {"operation.authorized", FieldKind::Authorized},
      {"timestamp", FieldKind::Timestamp},
  };
  if (auto it = fixed.find(path); it != fixed.end()) return FieldRef{it->second, {}};
  if (path.size() > kContextPrefix.size() && path.compare(0, kContextPrefix.size(), kContextPrefix) == 0) {
    return FieldRef{FieldKind::Context, path.substr(kContextPrefix.size())};
  }
  throw CompileError(path, "unknown field path");
}

[[noreturn]] void mismatch(const RuleCondition& c, const std::string& why) {
  throw CompileError(c.field, "operator " + std::string(to_string(c.op)) + " " + why);
}

const std::string& want_string(const RuleCondition& c) {
  if (const auto* s = std::get_if<std::string>(&c.value)) return *s;
  mismatch(c, "requires a string value");
}

double want_number(const RuleCondition& c) {
  if (const auto* d = std::get_if<double>(&c.value)) {
    if (!std::isfinite(*d)) mismatch(c, "requires a finite number");
    return *d;
  }
  mismatch(c, "requires a numeric value");
}

const std::vector<std::string>& want_list(const RuleCondition& c) {
  if (const auto* l = std::get_if<std::vector<std::string>>(&c.value)) return *l;
  mismatch(c, "requires a list value");
}

template <class E>
using Getter = E (*)(const GovernanceTelemetryEvent&);

template <class E>
std::function<Match(const GovernanceTelemetryEvent&)> compile_enum(const RuleCondition& c, Getter<E> get) {
  auto parse = [&c](const std::string& s) {
    auto v = try_parse_enum<E>(s);
    if (!v) throw CompileError(c.field, "'" + s + "' is not a valid " + std::string(EnumNames<E>::type_name));
    return *v;
  };
  switch (c.op) {
    case RuleOperator::Eq:
    case RuleOperator::Neq: {
      const E want = parse(want_string(c));
      const bool eq = c.op == RuleOperator::Eq;
      return [get, want, eq](const GovernanceTelemetryEvent& e) { return to_match((get(e) == want) == eq); };
    }
    case RuleOperator::In: {
      std::set<E> set;
      for (const auto& s : want_list(c)) set.insert(parse(s));
      return [get, set](const GovernanceTelemetryEvent& e) { return to_match(set.count(get(e)) != 0); };
    }
    default:
      mismatch(c, "is not valid on an enumerated field");
  }
}

std::function<Match(const GovernanceTelemetryEvent&)> compile_number(const RuleCondition& c,
                                                                     double (*get)(const GovernanceTelemetryEvent&)) {
  const double v = want_number(c);
  switch (c.op) {
    case RuleOperator::Eq:
      return [get, v](const GovernanceTelemetryEvent& e) { return to_match(get(e) == v); };
    case RuleOperator::Neq:
      return [get, v](const GovernanceTelemetryEvent& e) { return to_match(get(e) != v); };
    case RuleOperator::Gt:
      return [get, v](const GovernanceTelemetryEvent& e) { return to_match(get(e) > v); };
    case RuleOperator::Lt:
      return [get, v](const GovernanceTelemetryEvent& e) { return to_match(get(e) < v); };
    default:
      mismatch(c, "is not valid on a numeric field");
  }
}

std::function<Match(const GovernanceTelemetryEvent&)> compile_text(
    const RuleCondition& c, const std::string& (*get)(const GovernanceTelemetryEvent&)) {
  switch (c.op) {
    case RuleOperator::Eq:
    case RuleOperator::Neq: {
      const std::string v = want_string(c);
      const bool eq = c.op == RuleOperator::Eq;
      return [get, v, eq](const GovernanceTelemetryEvent& e) { return to_match((get(e) == v) == eq); };
    }
    case RuleOperator::In: {
      const std::set<std::string, std::less<>> set(want_list(c).begin(), want_list(c).end());
      return [get, set](const GovernanceTelemetryEvent& e) { return to_match(set.count(get(e)) != 0); };
    }
    case RuleOperator::Contains: {
      const std::string v = want_string(c);
      return [get, v](const GovernanceTelemetryEvent& e) {
        return to_match(get(e).find(v) != std::string::npos);
      };
    }
    default:
      mismatch(c, "is not valid on a text field");
  }
}

std::optional<double> numeric(const ContextValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::nullopt;
}

// Any operator on an absent context key is a non-match.
std::function<Match(const GovernanceTelemetryEvent&)> compile_context(const RuleCondition& c, const std::string& key) {
  auto lookup = [key](const GovernanceTelemetryEvent& e) -> const ContextValue* {
    auto it = e.context.find(key);
    return it == e.context.end() ? nullptr : &it->second;
  };
  switch (c.op) {
    case RuleOperator::Eq:
    case RuleOperator::Neq: {
      const bool eq = c.op == RuleOperator::Eq;
      if (std::holds_alternative<double>(c.value)) {
        const double v = want_number(c);
        return [lookup, v, eq](const GovernanceTelemetryEvent& e) {
          const ContextValue* cv = lookup(e);
          if (cv == nullptr) return Match::No;
          const auto n = numeric(*cv);
          if (!n) return Match::No;
          return to_match((*n == v) == eq);
        };
      }
      const std::string v = want_string(c);
      return [lookup, v, eq](const GovernanceTelemetryEvent& e) {
        const ContextValue* cv = lookup(e);
        if (cv == nullptr) return Match::No;
        const auto* s = std::get_if<std::string>(cv);
        if (s == nullptr) return Match::No;
        return to_match((*s == v) == eq);
      };
    }
    case RuleOperator::Gt:
    case RuleOperator::Lt: {
      const double v = want_number(c);
      const bool gt = c.op == RuleOperator::Gt;
      return [lookup, v, gt](const GovernanceTelemetryEvent& e) {
        const ContextValue* cv = lookup(e);
        if (cv == nullptr) return Match::No;
        const auto n = numeric(*cv);
        if (!n) return Match::No;
        return to_match(gt ? *n > v : *n < v);
      };
    }
    case RuleOperator::In: {
      const std::set<std::string, std::less<>> set(want_list(c).begin(), want_list(c).end());
      return [lookup, set](const GovernanceTelemetryEvent& e) {
        const ContextValue* cv = lookup(e);
        if (cv == nullptr) return Match::No;
        const auto* s = std::get_if<std::string>(cv);
        return to_match(s != nullptr && set.count(*s) != 0);
      };
    }
    case RuleOperator::Contains: {
      const std::string v = want_string(c);
      return [lookup, v](const GovernanceTelemetryEvent& e) {
        const ContextValue* cv = lookup(e);
        if (cv == nullptr) return Match::No;
        const auto* s = std::get_if<std::string>(cv);
        return to_match(s != nullptr && s->find(v) != std::string::npos);
      };
    }
    default:
      mismatch(c, "is not valid on a context field");
  }
}

std::function<Match(const GovernanceTelemetryEvent&)> compile_condition(
    const RuleCondition& c, const std::shared_ptr<const RuleEnvironment>& env) {
  const FieldRef ref = resolve_field(c.field);
  if (c.op == RuleOperator::ChainCrosses && ref.kind != FieldKind::ChainCrossing) {
    mismatch(c, "is only valid on lineage.any_jurisdiction_crossing");
  }
  switch (ref.kind) {
    case FieldKind::Classification:
      return compile_enum<Classification>(c, [](const GovernanceTelemetryEvent& e) {
        return e.governance.classification;
      });
    case FieldKind::Jurisdiction:
      return compile_enum<Jurisdiction>(c, [](const GovernanceTelemetryEvent& e) { return e.governance.jurisdiction; });
    case FieldKind::Sensitivity:
      return compile_enum<Sensitivity>(c, [](const GovernanceTelemetryEvent& e) { return e.governance.sensitivity; });
    case FieldKind::Verified:
      return compile_enum<Verification>(c, [](const GovernanceTelemetryEvent& e) { return e.governance.verified; });
    case FieldKind::Lineage: {
      if (c.op != RuleOperator::Contains) mismatch(c, "is not valid on the lineage list (use CONTAINS)");
      const std::string v = want_string(c);
      return [v](const GovernanceTelemetryEvent& e) {
        const auto& l = e.governance.lineage;
        return to_match(std::any_of(l.begin(), l.end(), [&](const AgentId& a) { return a.str() == v; }));
      };
    }
    case FieldKind::LineageLength:
      return compile_number(c, [](const GovernanceTelemetryEvent& e) {
        return static_cast<double>(e.governance.lineage.size());
      });
    case FieldKind::Timestamp:
      return compile_number(c, [](const GovernanceTelemetryEvent& e) { return e.timestamp; });
    case FieldKind::ChainCrossing: {
      if (c.op != RuleOperator::ChainCrosses) mismatch(c, "is not valid on the crossing selector (use CHAIN_CROSSES)");
      const std::string origin = want_string(c);
      if (origin != "*" && !try_parse_enum<Jurisdiction>(origin)) {
        throw CompileError(c.field, "'" + origin + "' is not a jurisdiction or '*'");
      }
      if (!env) throw CompileError(c.field, "CHAIN_CROSSES needs an agent jurisdiction registry");
      return [origin, env](const GovernanceTelemetryEvent& e) { return lineage_cross_check(e, origin, *env); };
    }
    case FieldKind::Source:
      return compile_text(c, [](const GovernanceTelemetryEvent& e) -> const std::string& { return e.source.str(); });
    case FieldKind::Receiver:
      return compile_text(c, [](const GovernanceTelemetryEvent& e) -> const std::string& { return e.receiver.str(); });
    case FieldKind::Operation:
      return compile_text(c, [](const GovernanceTelemetryEvent& e) -> const std::string& { return e.operation; });
    case FieldKind::Authorized: {
      if (c.op != RuleOperator::Eq && c.op != RuleOperator::Neq) mismatch(c, "is not valid on a boolean field");
      const std::string& s = want_string(c);
      if (s != "true" && s != "false") throw CompileError(c.field, "boolean value must be \"true\" or \"false\"");
      if (!env) throw CompileError(c.field, "operation.authorized needs an authorization table");
      const bool want = (s == "true") == (c.op == RuleOperator::Eq);
      return [want, env](const GovernanceTelemetryEvent& e) {
        auto it = env->authorized.find(e.source);
        if (it == env->authorized.end()) return Match::Unknown;
        return to_match((it->second.count(e.operation) != 0) == want);
      };
    }
    case FieldKind::Context:
      return compile_context(c, ref.context_key);
  }
  throw CompileError(c.field, "unhandled field");
}

}  // namespace

void validate_rule(const GovernanceRule& rule) {
  if (rule.id.empty()) throw CompileError("id", "rule id must be non-empty");
  if (rule.conditions.empty()) throw CompileError("conditions", "rule '" + rule.id + "' has no conditions");
  if (!(rule.confidence >= 0.0 && rule.confidence <= 1.0)) {
    throw CompileError("confidence", "rule '" + rule.id + "' confidence outside [0,1]");
  }
  if (rule.base_level < 0 || rule.base_level > 4) {
    throw CompileError("base_level", "rule '" + rule.id + "' base_level outside 0..4");
  }
  for (const auto& c : rule.conditions) {
    // Type-check with a placeholder environment; no evaluation happens.
    (void)compile_condition(c, std::make_shared<const RuleEnvironment>());
  }
}

CompiledRule::CompiledRule(GovernanceRule rule, std::shared_ptr<const RuleEnvironment> env)
    : rule_(std::move(rule)), env_(std::move(env)) {
  validate_rule(rule_);
  for (const auto& c : rule_.conditions) predicates_.push_back(compile_condition(c, env_));
}

Match CompiledRule::matches(const GovernanceTelemetryEvent& event) const {
  bool unknown = false;
  for (const auto& p : predicates_) {
    const Match m = p(event);
    if (m == Match::No) return Match::No;
    if (m == Match::Unknown) unknown = true;
  }
  return unknown ? Match::Unknown : Match::Yes;
}

Policy CompiledRule::policy() const {
  auto self = std::make_shared<const CompiledRule>(*this);
  return Policy(rule_.id, [self](const GovernanceTelemetryEvent& e) {
    if (self->matches(e) == Match::No) return PolicyDecision{Action::Allow, 1.0};
    return PolicyDecision{self->rule_.action, self->rule_.confidence};
  });
}

CompiledRule compile_rule_full(const GovernanceRule& rule, std::shared_ptr<const RuleEnvironment> env) {
  return CompiledRule(rule, std::move(env));
}

Policy compile_rule(const GovernanceRule& rule, std::shared_ptr<const RuleEnvironment> env) {
  return CompiledRule(rule, std::move(env)).policy();
}

Policy compile_rule(const GovernanceRule& rule) {
  return compile_rule(rule, std::make_shared<const RuleEnvironment>());
}

CompiledRulePack compile_rule_pack(const RulePack& pack, std::shared_ptr<const RuleEnvironment> env) {
  if (pack.rules.empty()) throw ConfigError("rule pack is empty");
  CompiledRulePack out;
  std::set<std::string> ids;
  for (const auto& r : pack.rules) {
    if (!ids.insert(r.id).second) throw ConfigError("duplicate rule id '" + r.id + "'");
    out.rules.emplace_back(r, env);
    out.policies.push_back(out.rules.back().policy());
  }
  return out;
}

int base_level_for(ViolationType violation, const RulePack& pack) {
  int best = -1;
  for (const auto& r : pack.rules) {
    if (r.violation == violation && r.action != Action::Allow) best = std::max(best, r.base_level);
  }
  if (best < 0) {
    throw ConfigError("no base level for violation kind " + std::string(to_string(violation)));
  }
  return best;
}

}  // namespace gaat
