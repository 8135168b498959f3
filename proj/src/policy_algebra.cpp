#include "gaat/policy_algebra.hpp"

#include <algorithm>
#include <memory>

namespace gaat {

PolicyDecision PolicyDecision::make(Action action, double confidence) {
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw ConfigError("policy confidence must lie in [0,1], got " + std::to_string(confidence));
  }
  return PolicyDecision{action, confidence};
}

Policy::Policy(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {
  if (!fn_) throw ConfigError("policy '" + id_ + "' has no evaluation function");
}

PolicyDecision Policy::operator()(const GovernanceTelemetryEvent& event) const {
  const PolicyDecision d = fn_(event);
  return PolicyDecision::make(d.action, d.confidence);
}

namespace {

PolicyDecision fold(std::span<const Policy> policies, const GovernanceTelemetryEvent& event,
                    std::vector<std::size_t>* triggered) {
  if (policies.empty()) throw ConfigError("policy set must be non-empty");
  Action action = Action::Allow;
  double confidence = 0.0;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const PolicyDecision d = policies[i](event);
    action = action_max(action, d.action);
    confidence = std::max(confidence, d.confidence);
    if (triggered != nullptr && d.action != Action::Allow) triggered->push_back(i);
  }
  return PolicyDecision{action, confidence};
}

}  // namespace

Policy parallel_compose(std::vector<Policy> policies) {
  if (policies.empty()) throw ConfigError("parallel_compose requires at least one policy");
  std::string id = "(";
  for (std::size_t i = 0; i < policies.size(); ++i) {
    if (i != 0) id += "||";
    id += policies[i].id();
  }
  id += ")";
  auto members = std::make_shared<const std::vector<Policy>>(std::move(policies));
  return Policy(std::move(id), [members](const GovernanceTelemetryEvent& e) { return fold(*members, e, nullptr); });
}

Policy sequential_compose(Policy p1, Policy p2) {
  std::string id = "(" + p1.id() + ">>" + p2.id() + ")";
  return Policy(std::move(id), [p1 = std::move(p1), p2 = std::move(p2)](const GovernanceTelemetryEvent& e) {
    const PolicyDecision d1 = p1(e);
    if (d1.action == Action::Deny) return d1;
    const PolicyDecision d2 = p2(e);
    if (d1.action == d2.action) return PolicyDecision{d1.action, std::max(d1.confidence, d2.confidence)};
    return severity(d1.action) > severity(d2.action) ? d1 : d2;
  });
}

PolicyDecision evaluate_policy_set(std::span<const Policy> policies, const GovernanceTelemetryEvent& event) {
  return fold(policies, event, nullptr);
}

PolicySetResult evaluate_policy_set_detailed(std::span<const Policy> policies, const GovernanceTelemetryEvent& event) {
  PolicySetResult r;
  r.decision = fold(policies, event, &r.triggered);
  return r;
}

}  // namespace gaat
