// SPDX-License-Identifier: Apache-2.0
#include "clawenv/service_spec.hpp"

#include "clawenv/errors.hpp"
#include "clawenv/text.hpp"

#include <algorithm>
#include <regex>
#include <set>

namespace clawenv {

namespace {

const std::set<std::string>& known_types() {
  static const std::set<std::string> types{"string", "integer", "number", "boolean",
                                           "date",   "array",   "object", "any"};
  return types;
}

ParamSpec param_from_text(std::string name, std::string text) {
  ParamSpec p;
  p.name = std::move(name);
  text = trim(text);
  if (!text.empty() && text.back() == '!') {
    p.required = true;
    text.pop_back();
  } else if (!text.empty() && text.back() == '?') {
    text.pop_back();
  }
  if (icontains(text, "(required)")) p.required = true;
  const std::string lowered = to_lower(trim(text));
  if (known_types().count(lowered)) {
    p.type = lowered;
  } else {
    p.description = text;
  }
  return p;
}

ParamSpec param_from_object(std::string name, const Json& j) {
  ParamSpec p;
  p.name = std::move(name);
  p.type = j.value("type", std::string{"string"});
  p.required = j.value("required", false);
  p.description = j.value("description", std::string{});
  return p;
}

std::vector<ParamSpec> params_from_json(const Json& j) {
  std::vector<ParamSpec> out;
  if (j.is_object()) {
    for (const auto& [name, v] : j.items()) {
      if (v.is_string()) out.push_back(param_from_text(name, v.get<std::string>()));
      else if (v.is_object()) out.push_back(param_from_object(name, v));
      else out.push_back(ParamSpec{name});
    }
  } else if (j.is_array()) {
    for (const auto& v : j) {
      if (v.is_string()) {
        std::string s = v.get<std::string>();
        bool required = !s.empty() && s.back() == '!';
        if (required || (!s.empty() && s.back() == '?')) s.pop_back();
        ParamSpec p{s};
        p.required = required;
        out.push_back(p);
      } else if (v.is_object() && v.contains("name")) {
        out.push_back(param_from_object(v["name"].get<std::string>(), v));
      }
    }
  }
  return out;
}

}  // namespace

const ParamSpec* EndpointSpec::param(std::string_view n) const {
  for (const auto& p : params) {
    if (p.name == n) return &p;
  }
  return nullptr;
}

const FieldSchema* FixtureSchema::field(std::string_view n) const {
  for (const auto& f : fields) {
    if (f.name == n) return &f;
  }
  return nullptr;
}

ServiceSpec service_spec_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("service", 0, "expected a mapping");
  ServiceSpec s;
  Json extra = j;
  auto take_string = [&](const char* key) {
    extra.erase(key);
    if (!j.contains(key) || j[key].is_null()) return std::string{};
    if (j[key].is_string()) return j[key].get<std::string>();
    return j[key].dump();
  };
  s.name = take_string("name");
  s.real_service = take_string("real_service");
  s.description = take_string("description");
  s.data_model = take_string("data_model");
  extra.erase("endpoints");
  extra.erase("fixture_schema");
  extra.erase("live_web");
  s.live_web = j.value("live_web", false);
  s.fixture_schema = j.contains("fixture_schema") ? j["fixture_schema"] : Json();
  if (j.contains("endpoints")) {
    if (!j["endpoints"].is_array()) throw ParseError("endpoints", 0, "expected a list");
    for (const auto& e : j["endpoints"]) {
      if (!e.is_object()) throw ParseError("endpoints[]", 0, "expected a mapping");
      EndpointSpec ep;
      ep.path = e.value("path", std::string{});
      ep.name = e.value("name", std::string{});
      ep.method = e.value("method", std::string{"POST"});
      ep.description = e.value("description", std::string{});
      if (e.contains("params")) ep.params = params_from_json(e["params"]);
      s.endpoints.push_back(std::move(ep));
    }
  }
  s.extra = extra;
  return s;
}

Json to_json(const ServiceSpec& spec) {
  Json j{{"name", spec.name},
         {"real_service", spec.real_service},
         {"description", spec.description}};
  Json eps = Json::array();
  for (const auto& e : spec.endpoints) {
    Json params = Json::object();
    for (const auto& p : e.params) {
      params[p.name] = Json{{"type", p.type}, {"required", p.required}};
      if (!p.description.empty()) params[p.name]["description"] = p.description;
    }
    Json ej{{"path", e.path}, {"name", e.name}, {"method", e.method}, {"params", params}};
    if (!e.description.empty()) ej["description"] = e.description;
    eps.push_back(std::move(ej));
  }
  j["endpoints"] = std::move(eps);
  j["data_model"] = spec.data_model;
  j["fixture_schema"] = spec.fixture_schema;
  if (spec.live_web) j["live_web"] = true;
  for (const auto& [k, v] : spec.extra.items()) j[k] = v;
  return j;
}

FixtureSchema fixture_schema_from_json(const Json& j) {
  FixtureSchema s;
  if (!j.is_object()) return s;
  s.collection = j.value("collection", std::string{});
  s.id_field = j.value("id_field", std::string{"id"});
  s.id_prefix = j.value("id_prefix", std::string{});
  s.count = j.value("count", 5);
  if (j.contains("fields") && j["fields"].is_object()) {
    for (const auto& [name, v] : j["fields"].items()) {
      FieldSchema f;
      f.name = name;
      if (v.is_string()) {
        std::string t = v.get<std::string>();
        if (!t.empty() && t.back() == '!') {
          f.required = true;
          t.pop_back();
        }
        f.type = t;
      } else if (v.is_object()) {
        f.type = v.value("type", std::string{"string"});
        f.required = v.value("required", false);
        f.items = v.value("items", std::string{});
        if (v.contains("enum") && v["enum"].is_array()) {
          for (const auto& e : v["enum"]) f.enum_values.push_back(e);
        }
      }
      s.fields.push_back(std::move(f));
    }
  }
  return s;
}

Json to_json(const FixtureSchema& schema) {
  if (schema.empty()) return Json::object();
  Json fields = Json::object();
  for (const auto& f : schema.fields) {
    Json fj{{"type", f.type}};
    if (f.required) fj["required"] = true;
    if (!f.enum_values.empty()) fj["enum"] = f.enum_values;
    if (!f.items.empty()) fj["items"] = f.items;
    fields[f.name] = std::move(fj);
  }
  return Json{{"collection", schema.collection}, {"id_field", schema.id_field},
              {"id_prefix", schema.id_prefix},   {"count", schema.count},
              {"fields", std::move(fields)}};
}

namespace {

bool type_matches(const std::string& type, const Json& v) {
  if (v.is_null()) return true;
  if (type == "string") return v.is_string();
  if (type == "integer") return v.is_number_integer() || v.is_number_unsigned();
  if (type == "number") return v.is_number();
  if (type == "boolean") return v.is_boolean();
  if (type == "date") {
    static const std::regex re(R"(\d{4}-\d{2}-\d{2}([T ][0-9:.]+(Z|[+-]\d{2}:?\d{2})?)?)");
    return v.is_string() && std::regex_match(v.get<std::string>(), re);
  }
  if (type == "array") return v.is_array();
  if (type == "object") return v.is_object();
  return true;
}

}  // namespace

std::vector<std::string> check_record(const FixtureSchema& schema, const Json& record) {
  std::vector<std::string> errors;
  if (!record.is_object()) {
    errors.emplace_back("record is not a mapping");
    return errors;
  }
  if (schema.empty()) return errors;
  if (!record.contains(schema.id_field)) {
    errors.push_back("missing id field \"" + schema.id_field + "\"");
  }
  for (const auto& f : schema.fields) {
    auto it = record.find(f.name);
    if (it == record.end() || it->is_null()) {
      if (f.required) errors.push_back("missing required field \"" + f.name + "\"");
      continue;
    }
    if (!type_matches(f.type, *it)) {
      errors.push_back("field \"" + f.name + "\" is not of type " + f.type);
      continue;
    }
    if (!f.enum_values.empty() &&
        std::find(f.enum_values.begin(), f.enum_values.end(), *it) == f.enum_values.end()) {
      errors.push_back("field \"" + f.name + "\" has value " + it->dump() + " outside its enum");
    }
    if (f.type == "array" && !f.items.empty()) {
      for (const auto& item : *it) {
        if (!type_matches(f.items, item)) {
          errors.push_back("field \"" + f.name + "\" has an element not of type " + f.items);
          break;
        }
      }
    }
  }
  return errors;
}

}  // namespace clawenv
