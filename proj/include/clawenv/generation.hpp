// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "clawenv/errors.hpp"
#include "clawenv/llm_client.hpp"
#include "clawenv/service_registry.hpp"
#include "clawenv/task_model.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace clawenv {

struct ParsedSpec {
  std::vector<std::string> services;
  std::vector<std::string> missing_services;
  Difficulty difficulty = Difficulty::medium;
  std::vector<IntentAtom> atoms;
  std::string reasoning;
  std::string category;
  std::string request;

  bool operator==(const ParsedSpec&) const = default;
};

Json to_json(const ParsedSpec& spec);
/// Throws GenerationError when an atom type is unknown or no service is named at all.
ParsedSpec parsed_spec_from_json(const Json& j);

/// Category name -> services, from the bundled categories table.
const std::map<std::string, std::vector<std::string>>& service_categories();
/// First category whose service list equals `services` as a set, else the first that contains
/// all of them, else "general".
std::string category_for(const std::vector<std::string>& services);

/// Names of the last ten accepted tasks plus the per-service focus-action cursor.
class GenerationHistory {
public:
  static constexpr std::size_t kCapacity = 10;

  void record(const std::string& task_name);
  const std::deque<std::string>& recent() const { return recent_; }

  std::string focus_action(const std::string& service, const std::vector<std::string>& actions) const;
  void advance(const std::string& service) { ++cursor_[service]; }
  std::size_t cursor(const std::string& service) const;

private:
  std::deque<std::string> recent_;
  std::map<std::string, std::size_t> cursor_;
};

class TaskDiscarded : public GenerationError {
public:
  TaskDiscarded(std::vector<std::vector<std::string>> attempts);
  /// Issues of each failed attempt, in order.
  const std::vector<std::vector<std::string>>& attempts() const { return attempts_; }

private:
  std::vector<std::vector<std::string>> attempts_;
};

class ServiceRejected : public GenerationError {
public:
  ServiceRejected(std::vector<std::vector<std::string>> attempts);
  const std::vector<std::vector<std::string>>& attempts() const { return attempts_; }

private:
  std::vector<std::vector<std::string>> attempts_;
};

class ServiceDeclined : public GenerationError {
public:
  using GenerationError::GenerationError;
};

inline constexpr int kMaxGenerationAttempts = 3;

struct GenerationOptions {
  std::uint64_t seed = 0;
  double timeout_s = 120.0;
  bool check_feasibility = true;
};

/// One Parser call; a malformed answer gets one reprompt carrying the error, then GenerationError.
/// Services the registry does not know are moved to missing_services.
ParsedSpec parse_request(const std::string& request, const ServiceRegistry& registry, const LlmClient& llm,
                         double timeout_s = 120.0);

struct GeneratedTask {
  TaskConfig config;
  int attempts_used = 0;
  std::string focus_action;
  std::vector<std::string> dedup_list;  // names shown to the provider on the accepted attempt
  std::string raw;                      // accepted provider text
};

/// Up to three attempts, each validated (structure, coverage, feasibility); failures feed back
/// into the next prompt. Throws TaskDiscarded after the third failure.
GeneratedTask generate_task(const ParsedSpec& spec, const ServiceRegistry& registry, const LlmClient& llm,
                            GenerationHistory& history, std::mt19937_64& rng, const GenerationOptions& opts = {});

using ConfirmHook = std::function<bool(const ServiceSpec&)>;

/// Asks on the terminal; true on y/yes.
bool terminal_confirm(const ServiceSpec& spec);

struct GeneratedService {
  ServiceSpec spec;
  int attempts_used = 0;
};

/// Designs, validates and smoke-tests a new service, asks `confirm`, then registers it.
/// Throws ServiceRejected after three failed designs, ServiceDeclined when confirm says no.
GeneratedService generate_service(const std::string& request, ServiceRegistry& registry, const LlmClient& llm,
                                  const ConfirmHook& confirm, double timeout_s = 120.0);

struct GeneratedFixtures {
  FixtureSet fixtures;
  std::vector<WorkspaceFile> files;  // content materialized
};

/// Keeps conforming records already in cfg, fills services that have none (procedurally when the
/// schema has enumerable fields or no provider is given, otherwise by provider call), and
/// materializes workspace files. A generated record that does not conform is regenerated up to
/// three times before FixtureError.
GeneratedFixtures generate_fixtures(const TaskConfig& cfg, const ServiceRegistry& registry, const LlmClient* llm,
                                    const std::vector<IntentAtom>& atoms = {}, std::uint64_t seed = 0,
                                    double timeout_s = 120.0);

/// Deterministic records for a schema; object names are woven into string fields.
std::vector<Json> procedural_records(const FixtureSchema& schema, int count, const std::vector<std::string>& names = {},
                                     std::uint64_t seed = 0);

struct BenchmarkOptions {
  GenerationOptions generation;
  bool create_services = false;
  ConfirmHook confirm;
};

struct BenchmarkResult {
  std::vector<TaskConfig> tasks;
  Json manifest = Json::object();  // {"request", "count", "accepted", "discarded", "entries": [...]}
};

/// `count` rounds of parse_request -> generate_task sharing one history. Discards are recorded in
/// the manifest and the batch continues.
BenchmarkResult generate_benchmark(const std::string& request, int count, const LlmClient& llm,
                                   ServiceRegistry& registry, const BenchmarkOptions& opts = {});

}  // namespace clawenv
