#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gaat/atomic_file.hpp"
#include "gaat/policy_rules.hpp"

namespace gaat {

namespace {

using nlohmann::json;

constexpr std::string_view kFormat = "gaat-rule-pack";
constexpr int kVersion = 1;

void require_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ParseError(where + ": unknown field '" + key + "'");
  }
  for (auto a : allowed) {
    if (!obj.contains(std::string(a))) throw ParseError(where + ": missing field '" + std::string(a) + "'");
  }
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ParseError(where + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

double get_number(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ParseError(where + ": '" + key + "' must be a number");
  return v.get<double>();
}

RuleValue parse_value(const json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return v.get<double>();
  if (v.is_array()) {
    std::vector<std::string> out;
    for (const auto& item : v) {
      if (!item.is_string()) throw ParseError(where + ": list values must be strings");
      out.push_back(item.get<std::string>());
    }
    return out;
  }
  throw ParseError(where + ": value must be a string, number or list of strings");
}

json value_to_json(const RuleValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

template <class E>
E parse_named(const json& obj, const char* key, const std::string& where) {
  const std::string s = get_string(obj, key, where);
  auto v = try_parse_enum<E>(s);
  if (!v) throw ParseError(where + ": invalid " + std::string(key) + " '" + s + "'");
  return *v;
}

}  // namespace

RulePack parse_rule_pack(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("rule pack is not valid JSON: ") + e.what());
  }
  require_keys(doc, {"format", "version", "rules"}, "rule pack");
  if (get_string(doc, "format", "rule pack") != kFormat) throw ParseError("rule pack: unexpected format tag");
  if (!doc.at("version").is_number_integer() || doc.at("version").get<int>() != kVersion) {
    throw ParseError("rule pack: unsupported version");
  }
  if (!doc.at("rules").is_array()) throw ParseError("rule pack: 'rules' must be a list");

  RulePack pack;
  std::size_t index = 0;
  for (const auto& r : doc.at("rules")) {
    const std::string where = "rule[" + std::to_string(index++) + "]";
    require_keys(r, {"id", "violation", "conditions", "action", "confidence", "base_level"}, where);
    GovernanceRule rule;
    rule.id = get_string(r, "id", where);
    rule.violation = parse_named<ViolationType>(r, "violation", where);
    rule.action = parse_named<Action>(r, "action", where);
    rule.confidence = get_number(r, "confidence", where);
    if (!r.at("base_level").is_number_integer()) throw ParseError(where + ": 'base_level' must be an integer");
    rule.base_level = r.at("base_level").get<int>();
    if (!r.at("conditions").is_array()) throw ParseError(where + ": 'conditions' must be a list");
    std::size_t ci = 0;
    for (const auto& c : r.at("conditions")) {
      const std::string cw = where + ".conditions[" + std::to_string(ci++) + "]";
      require_keys(c, {"field", "op", "value"}, cw);
      rule.conditions.push_back(RuleCondition{get_string(c, "field", cw), parse_named<RuleOperator>(c, "op", cw),
                                              parse_value(c.at("value"), cw)});
    }
    try {
      validate_rule(rule);
    } catch (const CompileError& e) {
      throw ParseError(where + ": " + e.what());
    }
    pack.rules.push_back(std::move(rule));
  }
  return pack;
}

std::string serialize_rule_pack(const RulePack& pack) {
  json rules = json::array();
  for (const auto& r : pack.rules) {
    json conds = json::array();
    for (const auto& c : r.conditions) {
      conds.push_back(json{{"field", c.field}, {"op", std::string(to_string(c.op))}, {"value", value_to_json(c.value)}});
    }
    rules.push_back(json{{"id", r.id},
                         {"violation", std::string(to_string(r.violation))},
                         {"conditions", std::move(conds)},
                         {"action", std::string(to_string(r.action))},
                         {"confidence", r.confidence},
                         {"base_level", r.base_level}});
  }
  json doc{{"format", std::string(kFormat)}, {"version", kVersion}, {"rules", std::move(rules)}};
  return doc.dump(2) + "\n";
}

RulePack load_rule_pack(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open rule pack '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_rule_pack(ss.str());
}

void save_rule_pack(const std::filesystem::path& path, const RulePack& pack) {
  write_file_atomic(path, serialize_rule_pack(pack));
}

}  // namespace gaat
