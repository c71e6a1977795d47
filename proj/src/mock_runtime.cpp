// SPDX-License-Identifier: Apache-2.0
#include "clawenv/mock_runtime.hpp"

#include "clawenv/errors.hpp"
#include "clawenv/text.hpp"

#include <chrono>
#include <cmath>
#include <set>
#include <stdexcept>
#include <thread>

namespace clawenv {

std::string_view to_string(InjectKind k) {
  switch (k) {
    case InjectKind::rate_limit: return "rate_limit";
    case InjectKind::server_error: return "server_error";
    case InjectKind::delay: return "delay";
  }
  return "delay";
}

std::optional<InjectKind> inject_kind_from_string(std::string_view s) {
  if (s == "rate_limit") return InjectKind::rate_limit;
  if (s == "server_error") return InjectKind::server_error;
  if (s == "delay") return InjectKind::delay;
  return std::nullopt;
}

Json to_json(const AuditRecord& r) {
  Json j{{"ordinal", r.ordinal},
         {"timestamp", r.wall_time},
         {"monotonic_s", r.mono_time},
         {"service", r.service},
         {"action", r.action},
         {"endpoint", r.endpoint},
         {"request_body", r.request_body},
         {"response_status", r.response_status},
         {"response_body", r.response_body},
         {"injected", r.injected}};
  if (r.injected_kind) j["injected_kind"] = to_string(*r.injected_kind);
  return j;
}

AuditRecord audit_record_from_json(const Json& j) {
  AuditRecord r;
  r.ordinal = j.value("ordinal", std::int64_t{0});
  r.wall_time = j.value("timestamp", 0.0);
  r.mono_time = j.value("monotonic_s", 0.0);
  r.service = j.value("service", std::string{});
  r.action = j.value("action", std::string{});
  r.endpoint = j.value("endpoint", std::string{});
  r.request_body = j.value("request_body", Json::object());
  r.response_status = j.value("response_status", 0);
  r.response_body = j.value("response_body", Json::object());
  r.injected = j.value("injected", false);
  if (auto it = j.find("injected_kind"); it != j.end() && it->is_string()) {
    r.injected_kind = inject_kind_from_string(it->get<std::string>());
  }
  return r;
}

Json to_json(const std::vector<AuditRecord>& log) {
  Json out = Json::array();
  for (const auto& r : log) out.push_back(to_json(r));
  return out;
}

std::vector<AuditRecord> audit_log_from_json(const Json& j) {
  const Json& arr = j.is_object() ? j.value("records", Json::array()) : j;
  std::vector<AuditRecord> out;
  for (const auto& r : arr) out.push_back(audit_record_from_json(r));
  return out;
}

bool same_call(const AuditRecord& a, const AuditRecord& b) {
  AuditRecord x = a;
  x.wall_time = b.wall_time;
  x.mono_time = b.mono_time;
  return x == b;
}

bool same_calls(const std::vector<AuditRecord>& a, const std::vector<AuditRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_call(a[i], b[i])) return false;
  }
  return true;
}

void ErrorInjectionPolicy::validate() const {
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("injection rate must be in [0, 1]");
  if (split_rate_limit < 0 || split_server_error < 0 || split_delay < 0) {
    throw std::invalid_argument("injection split entries must be non-negative");
  }
  const double sum = split_rate_limit + split_server_error + split_delay;
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("injection split must sum to 1.0");
  if (delay_min_s < 0 || delay_max_s < delay_min_s) throw std::invalid_argument("bad delay range");
  if (time_scale < 0) throw std::invalid_argument("time_scale must be non-negative");
}

bool ErrorInjectionPolicy::exempt(std::string_view path) const {
  while (path.size() > 1 && path.back() == '/') path.remove_suffix(1);
  for (const auto& s : exempt_suffixes) {
    if (path.ends_with(s)) return true;
  }
  return false;
}

InjectionDecision inject_decision(std::string_view path, const ErrorInjectionPolicy& policy, InjectionRng& rng) {
  InjectionDecision d;
  if (policy.exempt(path)) return d;
  if (policy.rate <= 0.0) return d;
  if (rng.uniform() >= policy.rate) return d;
  const double u = rng.uniform();
  if (u < policy.split_rate_limit) {
    d.kind = InjectKind::rate_limit;
  } else if (u < policy.split_rate_limit + policy.split_server_error) {
    d.kind = InjectKind::server_error;
  } else {
    d.kind = InjectKind::delay;
    d.delay_s = policy.delay_min_s + rng.uniform() * (policy.delay_max_s - policy.delay_min_s);
  }
  return d;
}

namespace {

double wall_now() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

double mono_now() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

bool param_type_ok(const std::string& type, const Json& v) {
  if (v.is_null()) return true;
  if (type == "string" || type == "date") return v.is_string();
  if (type == "integer") return v.is_number_integer() || v.is_number_unsigned();
  if (type == "number") return v.is_number();
  if (type == "boolean") return v.is_boolean();
  if (type == "array") return v.is_array();
  if (type == "object") return v.is_object();
  return true;
}

Json error_entry(std::string_view type, std::string_view loc, std::string msg) {
  return Json{{"type", type}, {"loc", Json::array({"body", loc})}, {"msg", std::move(msg)}};
}

std::vector<std::string_view> split_path(std::string_view path) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    auto j = path.find('/', i);
    if (j == std::string_view::npos) j = path.size();
    if (j > i) parts.push_back(path.substr(i, j - i));
    i = j;
  }
  return parts;
}

bool query_flag(std::string_view query, std::string_view key) {
  std::size_t i = 0;
  while (i <= query.size()) {
    auto j = query.find('&', i);
    if (j == std::string_view::npos) j = query.size();
    auto kv = query.substr(i, j - i);
    auto eq = kv.find('=');
    if (kv.substr(0, eq) == key) {
      if (eq == std::string_view::npos) return true;
      auto v = kv.substr(eq + 1);
      return v == "true" || v == "1" || v == "yes";
    }
    i = j + 1;
  }
  return false;
}

}  // namespace

Json param_errors(const EndpointSpec& endpoint, const Json& body) {
  Json errors = Json::array();
  for (const auto& [k, v] : body.items()) {
    const ParamSpec* p = endpoint.param(k);
    if (!p) {
      errors.push_back(error_entry("extra_forbidden", k, "Unexpected parameter '" + k + "'"));
    } else if (!param_type_ok(p->type, v)) {
      errors.push_back(error_entry("type_error", k, "Input should be of type " + p->type));
    }
  }
  for (const auto& p : endpoint.params) {
    if (p.required && (!body.contains(p.name) || body[p.name].is_null())) {
      errors.push_back(error_entry("missing", p.name, "Field required"));
    }
  }
  return errors;
}

MockRuntime::MockRuntime(ServiceRegistry registry, FixtureSet fixtures, ErrorInjectionPolicy policy,
                         std::vector<std::string> services, bool allow_net)
    : registry_(std::move(registry)),
      fixtures_(std::move(fixtures)),
      policy_(std::move(policy)),
      services_(std::move(services)),
      allow_net_(allow_net),
      rng_(policy_.seed),
      start_mono_(mono_now()) {
  try {
    policy_.validate();
  } catch (const std::invalid_argument& e) {
    throw StartError(e.what());
  }
  if (services_.empty()) services_ = registry_.names();
  for (const auto& s : services_) {
    if (!registry_.contains(s)) throw StartError("unknown service \"" + s + "\"");
  }
  for (const auto& [svc, records] : fixtures_) {
    const auto* rs = registry_.find(svc);
    if (!rs) throw StartError("fixtures.\"" + svc + "\": no such service");
    for (std::size_t i = 0; i < records.size(); ++i) {
      auto errs = check_record(rs->schema, records[i]);
      if (!errs.empty()) {
        throw StartError("fixtures." + svc + "[" + std::to_string(i) + "]: " + errs.front());
      }
    }
  }
  for (const auto& [svc, records] : fixtures_) store_.records(svc) = records;
}

bool MockRuntime::mounted(std::string_view service) const {
  for (const auto& s : services_) {
    if (s == service) return true;
  }
  return false;
}

void MockRuntime::reset() {
  std::lock_guard lock(mu_);
  store_ = DataStore{};
  for (const auto& [svc, records] : fixtures_) store_.records(svc) = records;
  audit_.clear();
  rng_.reseed(policy_.seed);
}

std::optional<std::vector<AuditRecord>> MockRuntime::read_audit(std::string_view service) const {
  if (!service.empty() && !mounted(service)) return std::nullopt;
  std::lock_guard lock(mu_);
  if (service.empty()) return audit_;
  std::vector<AuditRecord> out;
  for (const auto& r : audit_) {
    if (r.service == service) out.push_back(r);
  }
  return out;
}

std::optional<std::vector<AuditRecord>> MockRuntime::read_injected(std::string_view service) const {
  auto all = read_audit(service);
  if (!all) return all;
  std::vector<AuditRecord> out;
  for (auto& r : *all) {
    if (r.injected) out.push_back(std::move(r));
  }
  return out;
}

void MockRuntime::append(AuditRecord rec) {
  rec.ordinal = static_cast<std::int64_t>(audit_.size());
  rec.wall_time = wall_now();
  rec.mono_time = mono_now() - start_mono_;
  audit_.push_back(std::move(rec));
}

MockResponse MockRuntime::handle(std::string_view method, std::string_view target, std::string_view body) {
  std::string_view path = target;
  std::string_view query;
  if (auto q = target.find('?'); q != std::string_view::npos) {
    path = target.substr(0, q);
    query = target.substr(q + 1);
  }
  const auto parts = split_path(path);
  if (parts.empty()) return {404, Json{{"error", "not found"}, {"path", std::string(path)}}};

  static const std::set<std::string_view> control_verbs{"audit", "reset", "health"};
  if (parts.size() == 1 && control_verbs.count(parts[0])) return control(method, {}, parts[0], query);
  if (!mounted(parts[0])) {
    return {404, Json{{"error", "unknown service"}, {"service", std::string(parts[0])}}};
  }
  if (parts.size() == 2 && control_verbs.count(parts[1])) return control(method, parts[0], parts[1], query);
  return business(method, parts[0], path, body);
}

MockResponse MockRuntime::control(std::string_view method, std::string_view service, std::string_view verb,
                                  std::string_view query) {
  if (method != "GET" && method != "POST") return {405, Json{{"error", "method not allowed"}}};
  if (verb == "health") return {200, Json{{"status", "ok"}, {"services", services_}}};
  if (verb == "reset") {
    reset();
    return {200, Json{{"status", "reset"}}};
  }
  auto log = query_flag(query, "injected") ? read_injected(service) : read_audit(service);
  if (!log) return {404, Json{{"error", "unknown service"}}};
  Json body{{"records", to_json(*log)}, {"count", log->size()}};
  if (!service.empty()) body["service"] = service;
  return {200, std::move(body)};
}

MockResponse MockRuntime::business(std::string_view method, std::string_view service, std::string_view path,
                                   std::string_view raw_body) {
  const RegisteredService* rs = registry_.find(service);
  const EndpointSpec* ep = registry_.route(service, path);

  AuditRecord rec;
  rec.service = std::string(service);
  rec.endpoint = std::string(path);
  rec.action = ep ? ep->name : std::string{};

  Json body = Json::object();
  bool body_ok = true;
  if (!trim(raw_body).empty()) {
    body = Json::parse(raw_body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
      rec.request_body = Json{{"raw", std::string(raw_body)}};
      body = Json::object();
      body_ok = false;
    } else {
      rec.request_body = body;
    }
  }

  if (!ep) {
    std::lock_guard lock(mu_);
    rec.response_status = 404;
    rec.response_body = Json{{"error", "no such endpoint"}, {"service", rec.service}, {"path", rec.endpoint}};
    append(rec);
    return {rec.response_status, rec.response_body};
  }
  if (method != ep->method) {
    std::lock_guard lock(mu_);
    rec.response_status = 405;
    rec.response_body = Json{{"error", "method not allowed"}, {"allowed", ep->method}};
    append(rec);
    return {rec.response_status, rec.response_body};
  }

  InjectionDecision decision;
  {
    std::lock_guard lock(mu_);
    decision = inject_decision(path, policy_, rng_);
    if (decision.kind == InjectKind::rate_limit || decision.kind == InjectKind::server_error) {
      rec.injected = true;
      rec.injected_kind = decision.kind;
      if (decision.kind == InjectKind::rate_limit) {
        rec.response_status = 429;
        rec.response_body = Json{{"error", "rate limit exceeded"}, {"retry_after", 2}};
      } else {
        rec.response_status = 500;
        rec.response_body = Json{{"error", "internal server error"}};
      }
      append(rec);
      return {rec.response_status, rec.response_body};
    }
  }
  if (decision.kind == InjectKind::delay) {
    rec.injected = true;
    rec.injected_kind = InjectKind::delay;
    const double d = decision.delay_s * policy_.time_scale;
    if (d > 0) std::this_thread::sleep_for(std::chrono::duration<double>(d));
  }

  std::lock_guard lock(mu_);
  if (!body_ok) {
    rec.response_status = 422;
    rec.response_body = Json{{"detail", Json::array({error_entry("json_invalid", "body", "Request body must be a JSON object")})}};
  } else if (Json errs = param_errors(*ep, body); !errs.empty()) {
    rec.response_status = 422;
    rec.response_body = Json{{"detail", std::move(errs)}};
  } else {
    HandlerContext ctx{rs->spec, rs->schema, *ep, body, store_, allow_net_};
    try {
      auto it = rs->handlers.find(ep->name);
      HandlerResult res = it != rs->handlers.end() ? it->second(ctx) : generic_handler(ctx);
      rec.response_status = res.status;
      rec.response_body = std::move(res.body);
    } catch (const std::exception& e) {
      rec.response_status = 500;
      rec.response_body = Json{{"error", std::string("handler failed: ") + e.what()}};
    }
  }
  append(rec);
  return {rec.response_status, rec.response_body};
}

}  // namespace clawenv
