// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "clawenv/json.hpp"
#include "clawenv/service_registry.hpp"
#include "clawenv/task_model.hpp"

#include <cstdint>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace clawenv {

enum class InjectKind { rate_limit, server_error, delay };

std::string_view to_string(InjectKind k);
std::optional<InjectKind> inject_kind_from_string(std::string_view s);

struct AuditRecord {
  std::int64_t ordinal = 0;  // global across services
  double wall_time = 0.0;    // seconds since epoch
  double mono_time = 0.0;    // seconds since runtime start
  std::string service;
  std::string action;
  std::string endpoint;
  Json request_body = Json::object();
  int response_status = 200;
  Json response_body = Json::object();
  bool injected = false;
  std::optional<InjectKind> injected_kind;

  bool ok() const { return response_status >= 200 && response_status < 300; }
  bool operator==(const AuditRecord&) const = default;
};

Json to_json(const AuditRecord& r);
AuditRecord audit_record_from_json(const Json& j);
Json to_json(const std::vector<AuditRecord>& log);
std::vector<AuditRecord> audit_log_from_json(const Json& j);

/// Equality ignoring both timestamps.
bool same_call(const AuditRecord& a, const AuditRecord& b);
bool same_calls(const std::vector<AuditRecord>& a, const std::vector<AuditRecord>& b);

struct ErrorInjectionPolicy {
  double rate = 0.25;
  double split_rate_limit = 0.35;
  double split_server_error = 0.35;
  double split_delay = 0.30;
  double delay_min_s = 2.0;
  double delay_max_s = 4.0;
  std::vector<std::string> exempt_suffixes{"/audit", "/reset", "/health"};
  std::uint64_t seed = 0;
  double time_scale = 1.0;

  /// Throws std::invalid_argument when the rate or split is out of range.
  void validate() const;
  bool exempt(std::string_view path) const;

  static ErrorInjectionPolicy disabled() {
    ErrorInjectionPolicy p;
    p.rate = 0.0;
    return p;
  }
};

/// The single injection stream; uniform() draws are consumed in request arrival order.
class InjectionRng {
public:
  explicit InjectionRng(std::uint64_t seed = 0) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  void reseed(std::uint64_t seed) { engine_.seed(seed); }

private:
  std::mt19937_64 engine_;
};

struct InjectionDecision {
  std::optional<InjectKind> kind;  // empty = pass
  double delay_s = 0.0;            // unscaled

  bool injected() const { return kind.has_value(); }
};

/// Exempt paths pass without drawing. Otherwise u1 < rate injects; u2 picks the kind by the
/// cumulative split; a delay draws u3 for its length.
InjectionDecision inject_decision(std::string_view path, const ErrorInjectionPolicy& policy, InjectionRng& rng);

struct MockResponse {
  int status = 200;
  Json body = Json::object();
};

/// The in-memory multi-service API: routing, parameter validation, stores, audit log,
/// injection. Thread-safe; store mutation and audit appends are serialized.
class MockRuntime {
public:
  /// Mounts `services` (all registry services when empty). Throws StartError when a fixture
  /// record does not conform to its service's schema, or names an unknown service.
  MockRuntime(ServiceRegistry registry, FixtureSet fixtures, ErrorInjectionPolicy policy,
              std::vector<std::string> services = {}, bool allow_net = false);

  /// `target` may carry a query string. `body` is the raw request payload.
  MockResponse handle(std::string_view method, std::string_view target, std::string_view body);
  MockResponse call(std::string_view path, const Json& body) { return handle("POST", path, body.dump()); }

  /// Snapshot of the audit log, optionally one service's records. Returns nullopt for an
  /// unknown service.
  std::optional<std::vector<AuditRecord>> read_audit(std::string_view service = {}) const;
  std::optional<std::vector<AuditRecord>> read_injected(std::string_view service = {}) const;

  /// Restores the loaded fixtures, clears the audit log and reseeds the injection stream.
  void reset();
  bool healthy() const { return true; }

  const std::vector<std::string>& services() const { return services_; }
  const ErrorInjectionPolicy& policy() const { return policy_; }
  bool mounted(std::string_view service) const;

private:
  MockResponse control(std::string_view method, std::string_view service, std::string_view verb,
                       std::string_view query);
  MockResponse business(std::string_view method, std::string_view service, std::string_view path,
                        std::string_view body);
  void append(AuditRecord rec);

  ServiceRegistry registry_;
  FixtureSet fixtures_;
  ErrorInjectionPolicy policy_;
  std::vector<std::string> services_;
  bool allow_net_;

  mutable std::mutex mu_;
  DataStore store_;
  std::vector<AuditRecord> audit_;
  InjectionRng rng_;
  double start_mono_;
};

/// 422 details for a request body against an endpoint's params, FastAPI style; empty when valid.
Json param_errors(const EndpointSpec& endpoint, const Json& body);

}  // namespace clawenv
