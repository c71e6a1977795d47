// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "clawenv/json.hpp"

#include <string>
#include <vector>

namespace clawenv {

struct ParamSpec {
  std::string name;
  std::string type = "string";
  bool required = false;
  std::string description;

  bool operator==(const ParamSpec&) const = default;
};

struct EndpointSpec {
  std::string path;    // /{service}/{resource...}
  std::string name;    // canonical action name
  std::string method = "POST";
  std::string description;
  std::vector<ParamSpec> params;

  const ParamSpec* param(std::string_view n) const;
  bool operator==(const EndpointSpec&) const = default;
};

struct FieldSchema {
  std::string name;
  std::string type = "string";  // string, integer, number, boolean, date, array, object
  bool required = false;
  std::vector<Json> enum_values;
  std::string items;  // element type for arrays

  bool operator==(const FieldSchema&) const = default;
};

/// Shape of the records a service is pre-loaded with.
///
///   {"collection": "tasks", "id_field": "task_id", "id_prefix": "task-", "count": 7,
///    "fields": {"title": {"type": "string", "required": true},
///               "status": {"type": "string", "enum": ["open", "completed"]}}}
///
/// An empty schema (no collection, no fields) describes a service without fixtures.
struct FixtureSchema {
  std::string collection;
  std::string id_field = "id";
  std::string id_prefix;
  int count = 5;  // default procedural record count
  std::vector<FieldSchema> fields;

  bool empty() const { return collection.empty() && fields.empty(); }
  const FieldSchema* field(std::string_view n) const;
  bool operator==(const FixtureSchema&) const = default;
};

struct ServiceSpec {
  std::string name;
  std::string real_service;
  std::string description;
  std::vector<EndpointSpec> endpoints;
  std::string data_model;
  Json fixture_schema;  // raw; see FixtureSchema for the accepted shape
  bool live_web = false;
  Json extra = Json::object();

  bool operator==(const ServiceSpec&) const = default;
};

/// Accepts params as {name: "type"} (suffix "!" = required, "?" = optional),
/// {name: {type, required, description}}, or a list of names / such objects.
ServiceSpec service_spec_from_json(const Json& j);
Json to_json(const ServiceSpec& spec);

FixtureSchema fixture_schema_from_json(const Json& j);
Json to_json(const FixtureSchema& schema);

/// Human-readable reasons the record does not conform; empty when it does.
std::vector<std::string> check_record(const FixtureSchema& schema, const Json& record);

}  // namespace clawenv
