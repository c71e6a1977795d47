// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "clawenv/json.hpp"
#include "clawenv/service_spec.hpp"
#include "clawenv/task_model.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace clawenv {

/// Per-service in-memory record collections.
class DataStore {
public:
  std::vector<Json>& records(const std::string& service) { return records_[service]; }

  /// Fresh id of the form <prefix><NNN> not used by any record of the service.
  std::string next_id(const std::string& service, const FixtureSchema& schema);

  bool operator==(const DataStore&) const = default;

private:
  std::map<std::string, std::vector<Json>> records_;
  std::map<std::string, int> counters_;
};

struct HandlerResult {
  int status = 200;
  Json body = Json::object();
};

struct HandlerContext {
  const ServiceSpec& spec;
  const FixtureSchema& schema;
  const EndpointSpec& endpoint;
  const Json& body;
  DataStore& store;
  bool allow_net = false;

  std::vector<Json>& records() { return store.records(spec.name); }
};

using Handler = std::function<HandlerResult(HandlerContext&)>;

/// CRUD-over-fixture-schema behaviour chosen from the action's verb
/// (list_/search_, get_, create_/send_/add_, update_/mark_, delete_/remove_; anything else echoes).
HandlerResult generic_handler(HandlerContext& ctx);

struct RegisteredService {
  ServiceSpec spec;
  FixtureSchema schema;
  std::map<std::string, Handler> handlers;  // by action; missing actions use generic_handler
};

class ServiceRegistry {
public:
  /// The built-in library: todo, gmail, calendar, contacts with bespoke handlers, and the
  /// remaining catalogue services (notes, crm, finance, helpdesk, inventory, kb, config,
  /// scheduler, rss, web, web_real) served by the generic handler.
  static ServiceRegistry builtin();

  /// Registers (or replaces) a service.
  void add(ServiceSpec spec, std::map<std::string, Handler> handlers = {});

  bool contains(std::string_view name) const;
  const RegisteredService* find(std::string_view name) const;
  std::vector<std::string> names() const;
  std::vector<std::string> actions(std::string_view service) const;
  bool has_action(std::string_view service, std::string_view action) const;

  /// Endpoint serving `path` in `service`, or nullptr.
  const EndpointSpec* route(std::string_view service, std::string_view path) const;
  const EndpointSpec* endpoint_for_action(std::string_view service, std::string_view action) const;

  bool is_live_web(std::string_view service) const;
  LiveWebPredicate live_web_predicate() const;

  /// Loads every *.json ServiceSpec in `dir` (generic handlers).
  void load_directory(const std::filesystem::path& dir);

private:
  std::map<std::string, RegisteredService, std::less<>> services_;
};

void save_service_spec(const std::filesystem::path& dir, const ServiceSpec& spec);

}  // namespace clawenv
