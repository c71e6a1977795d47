// SPDX-License-Identifier: Apache-2.0
#include "clawenv/generation.hpp"

#include "clawenv/assets.hpp"
#include "clawenv/mock_runtime.hpp"
#include "clawenv/text.hpp"
#include "clawenv/validator.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <set>

namespace clawenv {

namespace {

std::string join(const std::vector<std::string>& v, std::string_view sep) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : std::string(sep)) + s;
  return out;
}

std::optional<Difficulty> difficulty_from(std::string_view s) {
  const std::string l = to_lower(trim(s));
  if (l == "easy") return Difficulty::easy;
  if (l == "medium") return Difficulty::medium;
  if (l == "hard") return Difficulty::hard;
  return std::nullopt;
}

std::vector<std::string> string_list(const Json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  if (!j[key].is_array()) throw GenerationError(std::string("\"") + key + "\" must be a list");
  for (const auto& v : j[key]) {
    if (!v.is_string()) throw GenerationError(std::string("\"") + key + "\" must list strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

Json to_json(const ParsedSpec& spec) {
  Json atoms = Json::array();
  for (const auto& a : spec.atoms) atoms.push_back(to_json(a));
  Json j{{"services", spec.services},
         {"missing_services", spec.missing_services},
         {"difficulty", to_string(spec.difficulty)},
         {"atoms", atoms},
         {"reasoning", spec.reasoning}};
  if (!spec.category.empty()) j["category"] = spec.category;
  if (!spec.request.empty()) j["request"] = spec.request;
  return j;
}

ParsedSpec parsed_spec_from_json(const Json& j) {
  if (!j.is_object()) throw GenerationError("expected a JSON object");
  ParsedSpec s;
  s.services = string_list(j, "services");
  s.missing_services = string_list(j, "missing_services");
  if (s.services.empty() && s.missing_services.empty()) throw GenerationError("no services named");
  if (j.contains("difficulty")) {
    if (!j["difficulty"].is_string()) throw GenerationError("difficulty must be a string");
    auto d = difficulty_from(j["difficulty"].get<std::string>());
    if (!d) throw GenerationError("unknown difficulty \"" + j["difficulty"].get<std::string>() + "\"");
    s.difficulty = *d;
  }
  if (!j.contains("atoms") || !j["atoms"].is_array()) throw GenerationError("\"atoms\" must be a list");
  for (std::size_t i = 0; i < j["atoms"].size(); ++i) {
    const Json& a = j["atoms"][i];
    if (!a.is_object()) throw GenerationError("atoms[" + std::to_string(i) + "] is not an object");
    const std::string type = a.value("type", std::string{});
    if (!atom_type_from_string(type)) {
      throw GenerationError("atoms[" + std::to_string(i) + "]: invalid atom type \"" + type +
                            "\" (expected action, object or constraint)");
    }
    if (a.value("name", std::string{}).empty()) throw GenerationError("atoms[" + std::to_string(i) + "] has no name");
    s.atoms.push_back(intent_atom_from_json(a));
  }
  s.reasoning = j.value("reasoning", std::string{});
  s.category = j.value("category", std::string{});
  s.request = j.value("request", std::string{});
  return s;
}

const std::map<std::string, std::vector<std::string>>& service_categories() {
  static const auto table = [] {
    std::map<std::string, std::vector<std::string>> out;
    const Json doc = Json::parse(asset("config/categories.json"));
    for (const auto& [k, v] : doc.items()) {
      out[k] = v.get<std::vector<std::string>>();
    }
    return out;
  }();
  return table;
}

std::string category_for(const std::vector<std::string>& services) {
  const std::set<std::string> want(services.begin(), services.end());
  if (want.empty()) return "terminal";
  for (const auto& [name, svcs] : service_categories()) {
    if (std::set<std::string>(svcs.begin(), svcs.end()) == want) return name;
  }
  for (const auto& [name, svcs] : service_categories()) {
    const std::set<std::string> have(svcs.begin(), svcs.end());
    if (std::includes(have.begin(), have.end(), want.begin(), want.end())) return name;
  }
  return "general";
}

void GenerationHistory::record(const std::string& task_name) {
  recent_.push_back(task_name);
  while (recent_.size() > kCapacity) recent_.pop_front();
}

std::string GenerationHistory::focus_action(const std::string& service, const std::vector<std::string>& actions) const {
  if (actions.empty()) return {};
  return actions[cursor(service) % actions.size()];
}

std::size_t GenerationHistory::cursor(const std::string& service) const {
  auto it = cursor_.find(service);
  return it == cursor_.end() ? 0 : it->second;
}

namespace {

std::string attempts_summary(const std::vector<std::vector<std::string>>& attempts) {
  std::string out;
  for (std::size_t i = 0; i < attempts.size(); ++i) {
    out += "\n  attempt " + std::to_string(i + 1) + ":";
    for (const auto& issue : attempts[i]) out += "\n    - " + issue;
  }
  return out;
}

}  // namespace

TaskDiscarded::TaskDiscarded(std::vector<std::vector<std::string>> attempts)
    : GenerationError("task discarded after " + std::to_string(attempts.size()) + " attempts" +
                      attempts_summary(attempts)),
      attempts_(std::move(attempts)) {}

ServiceRejected::ServiceRejected(std::vector<std::vector<std::string>> attempts)
    : GenerationError("service rejected after " + std::to_string(attempts.size()) + " attempts" +
                      attempts_summary(attempts)),
      attempts_(std::move(attempts)) {}

// --- parser ---

ParsedSpec parse_request(const std::string& request, const ServiceRegistry& registry, const LlmClient& llm,
                         double timeout_s) {
  if (trim(request).empty()) throw GenerationError("empty request");
  std::string categories;
  for (const auto& [name, svcs] : service_categories()) {
    categories += name + " -> [" + join(svcs, ", ") + "]\n";
  }
  const std::string prompt = render(asset("prompts/parser.txt"), {{"services", join(registry.names(), ", ")},
                                                                   {"categories", categories},
                                                                   {"request", request}});
  ChatRequest req = ChatRequest::simple("", prompt, timeout_s);
  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    ChatResponse res = llm.complete_chat(req);
    try {
      auto j = extract_json_object(res.text);
      if (!j) throw GenerationError("no JSON object in the reply");
      ParsedSpec spec = parsed_spec_from_json(*j);
      std::vector<std::string> known;
      for (const auto& s : spec.services) {
        if (registry.contains(s)) {
          known.push_back(s);
        } else if (std::find(spec.missing_services.begin(), spec.missing_services.end(), s) ==
                   spec.missing_services.end()) {
          spec.missing_services.push_back(s);
        }
      }
      spec.services = known;
      spec.request = request;
      if (spec.category.empty()) spec.category = category_for(spec.services);
      return spec;
    } catch (const GenerationError& e) {
      last_error = e.what();
      req.messages.push_back({"assistant", res.text});
      req.messages.push_back({"user", "Your reply could not be used: " + last_error +
                                          ". Respond again with the JSON object only."});
    }
  }
  throw GenerationError("parser reply unusable after reprompt: " + last_error);
}

// --- task generation ---

namespace {

std::string endpoint_listing(const ServiceRegistry& registry, const std::vector<std::string>& services) {
  std::string out;
  for (const auto& s : services) {
    const auto* rs = registry.find(s);
    if (!rs) continue;
    out += s + ":\n";
    for (const auto& e : rs->spec.endpoints) {
      std::vector<std::string> params;
      for (const auto& p : e.params) params.push_back(p.name + (p.required ? "!" : ""));
      out += "  - POST " + e.path + "  " + e.name + "(" + join(params, ", ") + ")";
      if (!e.description.empty()) out += "  " + e.description;
      out += "\n";
    }
  }
  return out.empty() ? "(none: file-based task, use workspace files)\n" : out;
}

double judge_cap_for(const ParsedSpec& spec, const ServiceRegistry& registry) {
  for (const auto& s : spec.services) {
    if (registry.is_live_web(s)) return llm_judge_cap(TaskKind::live_web);
  }
  if (spec.services.empty()) return llm_judge_cap(TaskKind::file_dependent);
  return llm_judge_cap(spec.services.size() == 1 ? TaskKind::api_single : TaskKind::api_cross);
}

std::string format_issue(const Issue& i) {
  return "[check " + std::to_string(i.check_id) + "] " + (i.path.empty() ? "" : i.path + ": ") + i.message;
}

}  // namespace

GeneratedTask generate_task(const ParsedSpec& spec, const ServiceRegistry& registry, const LlmClient& llm,
                            GenerationHistory& history, std::mt19937_64& rng, const GenerationOptions& opts) {
  for (const auto& s : spec.services) {
    if (!registry.contains(s)) throw GenerationError("service \"" + s + "\" is not registered");
  }
  std::vector<std::string> shuffled = spec.services;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const std::string rotation_key = spec.services.empty() ? std::string{} : spec.services.front();
  const std::string focus =
      rotation_key.empty() ? std::string{} : history.focus_action(rotation_key, registry.actions(rotation_key));

  std::string atoms;
  for (const auto& a : spec.atoms) {
    atoms += "- " + std::string(to_string(a.type)) + ": " + a.name + (a.description.empty() ? "" : " (" + a.description + ")") + "\n";
  }
  if (atoms.empty()) atoms = "(none)\n";

  std::vector<std::vector<std::string>> failures;
  std::string feedback;
  for (int attempt = 1; attempt <= kMaxGenerationAttempts; ++attempt) {
    std::vector<std::string> dedup(history.recent().begin(), history.recent().end());
    std::string recent;
    for (const auto& n : dedup) recent += "- " + n + "\n";
    if (recent.empty()) recent = "(none)\n";
    char cap[16];
    std::snprintf(cap, sizeof(cap), "%.2f", judge_cap_for(spec, registry));
    std::string prompt = render(asset("prompts/task_generation.txt"),
                                {{"domain", spec.category.empty() ? category_for(spec.services) : spec.category},
                                 {"service", shuffled.empty() ? std::string("none") : join(shuffled, ", ")},
                                 {"difficulty", std::string(to_string(spec.difficulty))},
                                 {"endpoints", endpoint_listing(registry, shuffled)},
                                 {"focus_action", focus.empty() ? std::string("(any)") : focus},
                                 {"judge_cap", cap},
                                 {"atoms", atoms},
                                 {"recent_tasks", recent}});
    if (!spec.request.empty()) prompt += "\nOriginal request: " + spec.request + "\n";
    if (!feedback.empty()) prompt += "\nYour previous attempt was rejected:\n" + feedback + "Fix every issue.\n";

    std::vector<std::string> issues;
    std::string text;
    TaskConfig cfg;
    try {
      ChatRequest req = ChatRequest::simple("", prompt, opts.timeout_s);
      text = llm.complete_chat(req).text;
      cfg = parse_task_config(strip_code_fence(text));
      if (cfg.services.empty()) cfg.services = spec.services;
      if (cfg.category.empty()) cfg.category = spec.category.empty() ? category_for(cfg.services) : spec.category;
      for (const auto& i : validate_structure(cfg, registry)) issues.push_back(format_issue(i));
      for (const auto& a : verify_coverage(cfg, spec.atoms).uncovered) {
        issues.push_back("[coverage] " + std::string(to_string(a.type)) + " atom \"" + a.name + "\" is not covered");
      }
      if (issues.empty() && opts.check_feasibility) {
        auto v = check_feasibility(cfg, llm);
        if (!v.feasible) issues.push_back("[feasibility] " + v.reasoning);
      }
    } catch (const ParseError& e) {
      issues.push_back(std::string("[parse] ") + e.what());
    } catch (const ProviderError& e) {
      issues.push_back(std::string("[provider] ") + e.what());
    } catch (const Error& e) {
      issues.push_back(std::string("[parse] ") + e.what());
    }

    if (issues.empty()) {
      history.record(cfg.task_name);
      if (!rotation_key.empty()) history.advance(rotation_key);
      return GeneratedTask{std::move(cfg), attempt, focus, std::move(dedup), std::move(text)};
    }
    feedback.clear();
    for (const auto& i : issues) feedback += "- " + i + "\n";
    failures.push_back(std::move(issues));
  }
  throw TaskDiscarded(std::move(failures));
}

// --- service generation ---

bool terminal_confirm(const ServiceSpec& spec) {
  std::cerr << "New service \"" << spec.name << "\" (" << spec.endpoints.size() << " endpoints";
  if (!spec.real_service.empty()) std::cerr << ", simulates " << spec.real_service;
  std::cerr << ")\n";
  for (const auto& e : spec.endpoints) std::cerr << "  POST " << e.path << "  " << e.name << "\n";
  std::cerr << "Register it? [y/N] " << std::flush;
  std::string answer;
  if (!std::getline(std::cin, answer)) return false;
  answer = to_lower(trim(answer));
  return answer == "y" || answer == "yes";
}

namespace {

Json example_args(const EndpointSpec& e, const std::vector<Json>& records, const FixtureSchema& schema) {
  Json body = Json::object();
  for (const auto& p : e.params) {
    if (!p.required) continue;
    if (p.name == schema.id_field && !records.empty() && records.front().contains(p.name)) {
      body[p.name] = records.front()[p.name];
    } else if (p.type == "integer") body[p.name] = 1;
    else if (p.type == "number") body[p.name] = 1.5;
    else if (p.type == "boolean") body[p.name] = true;
    else if (p.type == "array") body[p.name] = Json::array();
    else if (p.type == "object") body[p.name] = Json::object();
    else if (p.type == "date") body[p.name] = "2026-03-15";
    else body[p.name] = "sample";
  }
  return body;
}

std::vector<std::string> smoke_test(const ServiceSpec& spec, const ServiceRegistry& registry) {
  std::vector<std::string> problems;
  ServiceRegistry trial = registry;
  trial.add(spec);
  const FixtureSchema schema = fixture_schema_from_json(spec.fixture_schema);
  FixtureSet fixtures;
  fixtures[spec.name] = procedural_records(schema, std::max(1, std::min(schema.count, 5)));
  try {
    MockRuntime runtime(trial, fixtures, ErrorInjectionPolicy::disabled(), {spec.name});
    for (const auto& e : spec.endpoints) {
      auto res = runtime.call(e.path, example_args(e, fixtures[spec.name], schema));
      if (res.status >= 500 || res.status == 404 || res.status == 405) {
        problems.push_back("smoke test: " + e.name + " (" + e.path + ") answered " + std::to_string(res.status));
      }
    }
    auto audit = runtime.read_audit(spec.name);
    if (!audit || audit->size() != spec.endpoints.size()) problems.push_back("smoke test: audit log incomplete");
  } catch (const std::exception& e) {
    problems.push_back(std::string("smoke test: ") + e.what());
  }
  return problems;
}

}  // namespace

GeneratedService generate_service(const std::string& request, ServiceRegistry& registry, const LlmClient& llm,
                                  const ConfirmHook& confirm, double timeout_s) {
  std::vector<std::vector<std::string>> failures;
  const std::string base = render(asset("prompts/service_generation.txt"),
                                  {{"request", request}, {"existing", join(registry.names(), ", ")}});
  std::string feedback;
  for (int attempt = 1; attempt <= kMaxGenerationAttempts; ++attempt) {
    std::string prompt = base;
    if (!feedback.empty()) prompt += "\nYour previous design was rejected:\n" + feedback + "Fix every issue.\n";
    std::vector<std::string> issues;
    ServiceSpec spec;
    try {
      ChatRequest req = ChatRequest::simple("", prompt, timeout_s);
      auto j = extract_json_object(llm.complete_chat(req).text);
      if (!j) throw GenerationError("no JSON object in the reply");
      spec = service_spec_from_json(*j);
      for (const auto& i : validate_service_spec(spec, registry)) {
        issues.push_back((i.path.empty() ? "" : i.path + ": ") + i.message);
      }
      if (issues.empty()) issues = smoke_test(spec, registry);
    } catch (const ProviderError& e) {
      issues.push_back(std::string("provider: ") + e.what());
    } catch (const Error& e) {
      issues.push_back(e.what());
    }
    if (issues.empty()) {
      if (confirm && !confirm(spec)) throw ServiceDeclined("service \"" + spec.name + "\" declined");
      registry.add(spec);
      return GeneratedService{std::move(spec), attempt};
    }
    feedback.clear();
    for (const auto& i : issues) feedback += "- " + i + "\n";
    failures.push_back(std::move(issues));
  }
  throw ServiceRejected(std::move(failures));
}

// --- fixtures ---

std::vector<Json> procedural_records(const FixtureSchema& schema, int count, const std::vector<std::string>& names,
                                     std::uint64_t seed) {
  std::vector<Json> out;
  if (schema.empty()) return out;
  std::mt19937_64 rng(seed);
  std::size_t name_cursor = 0;
  for (int i = 0; i < count; ++i) {
    Json rec = Json::object();
    char id[64];
    std::snprintf(id, sizeof(id), "%s%03d", schema.id_prefix.c_str(), i + 1);
    rec[schema.id_field] = std::string(id);
    for (const auto& f : schema.fields) {
      if (f.name == schema.id_field) continue;
      if (!f.enum_values.empty()) {
        rec[f.name] = f.enum_values[static_cast<std::size_t>(i) % f.enum_values.size()];
        continue;
      }
      if (f.type == "integer") {
        rec[f.name] = static_cast<std::int64_t>(i + 1 + rng() % 10);
      } else if (f.type == "number") {
        rec[f.name] = static_cast<double>(100 + rng() % 900) + 0.5;
      } else if (f.type == "boolean") {
        rec[f.name] = i % 2 == 0;
      } else if (f.type == "date") {
        char d[16];
        std::snprintf(d, sizeof(d), "2026-03-%02d", 1 + (i * 3 + static_cast<int>(rng() % 3)) % 28);
        rec[f.name] = std::string(d);
      } else if (f.type == "array") {
        rec[f.name] = Json::array();
        if (f.items.empty() || f.items == "string") rec[f.name].push_back(f.name + "-" + std::to_string(i % 3 + 1));
      } else if (f.type == "object" || f.type == "any") {
        rec[f.name] = Json::object();
      } else if (name_cursor < names.size()) {
        rec[f.name] = names[name_cursor++];
      } else {
        rec[f.name] = f.name + " " + std::to_string(i + 1);
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

namespace {

bool enumerable(const FixtureSchema& schema) {
  return std::any_of(schema.fields.begin(), schema.fields.end(), [](const FieldSchema& f) { return !f.enum_values.empty(); });
}

std::vector<Json> llm_records(const std::string& service, const FixtureSchema& schema, int count, const TaskConfig& cfg,
                              const std::vector<std::string>& names, const LlmClient& llm, double timeout_s) {
  auto ask = [&](int n, const std::string& extra) {
    std::string prompt = render(asset("prompts/fixture_generation.txt"),
                                {{"service", service},
                                 {"count", std::to_string(n)},
                                 {"schema", to_json(schema).dump(2)},
                                 {"prompt", cfg.prompt},
                                 {"id_field", schema.id_field},
                                 {"objects", names.empty() ? std::string("(none)") : join(names, ", ")}});
    prompt += extra;
    ChatRequest req = ChatRequest::simple("", prompt, timeout_s);
    auto j = extract_json_object(llm.complete_chat(req).text);
    std::vector<Json> recs;
    if (j && j->contains("records") && (*j)["records"].is_array()) {
      for (const auto& r : (*j)["records"]) recs.push_back(r);
    }
    return recs;
  };
  std::vector<Json> records = ask(count, "");
  if (records.empty()) records.resize(static_cast<std::size_t>(count), Json());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto errors = check_record(schema, records[i]);
    for (int retry = 0; !errors.empty() && retry < kMaxGenerationAttempts; ++retry) {
      std::string extra = "\nThis record was rejected: " + records[i].dump() + "\nProblems:\n";
      for (const auto& e : errors) extra += "- " + e + "\n";
      auto again = ask(1, extra);
      records[i] = again.empty() ? Json() : again.front();
      errors = check_record(schema, records[i]);
    }
    if (!errors.empty()) {
      throw FixtureError("fixtures." + service + "[" + std::to_string(i) + "]: " + join(errors, "; "));
    }
  }
  return records;
}

}  // namespace

GeneratedFixtures generate_fixtures(const TaskConfig& cfg, const ServiceRegistry& registry, const LlmClient* llm,
                                    const std::vector<IntentAtom>& atoms, std::uint64_t seed, double timeout_s) {
  GeneratedFixtures out;
  std::vector<std::string> names;
  for (const auto& a : atoms) {
    if (a.type == AtomType::object && !icontains(cfg.prompt, a.name)) names.push_back(a.name);
  }
  for (const auto& service : cfg.services) {
    const auto* rs = registry.find(service);
    if (!rs) throw FixtureError("fixtures." + service + ": unknown service");
    const FixtureSchema& schema = rs->schema;
    auto& records = out.fixtures[service];
    if (schema.empty()) continue;
    auto existing = cfg.fixtures.find(service);
    if (existing != cfg.fixtures.end() && !existing->second.empty()) {
      for (std::size_t i = 0; i < existing->second.size(); ++i) {
        auto errors = check_record(schema, existing->second[i]);
        if (errors.empty()) {
          records.push_back(existing->second[i]);
        } else if (llm && !enumerable(schema)) {
          records.push_back(llm_records(service, schema, 1, cfg, {}, *llm, timeout_s).front());
        } else {
          records.push_back(procedural_records(schema, static_cast<int>(i) + 1, {}, seed).back());
        }
      }
      continue;
    }
    if (!llm || enumerable(schema)) {
      records = procedural_records(schema, schema.count, names, seed);
    } else {
      records = llm_records(service, schema, schema.count, cfg, names, *llm, timeout_s);
    }
  }
  for (const auto& f : cfg.files) {
    WorkspaceFile m = f;
    m.content = materialize_file(f);
    m.generator.reset();
    out.files.push_back(std::move(m));
  }
  return out;
}

// --- benchmark ---

BenchmarkResult generate_benchmark(const std::string& request, int count, const LlmClient& llm,
                                   ServiceRegistry& registry, const BenchmarkOptions& opts) {
  if (count < 1) throw GenerationError("count must be at least 1");
  BenchmarkResult out;
  GenerationHistory history;
  std::mt19937_64 rng(opts.generation.seed);
  Json entries = Json::array();
  int accepted = 0, discarded = 0;
  for (int i = 0; i < count; ++i) {
    Json entry{{"index", i}};
    try {
      ParsedSpec spec = parse_request(request, registry, llm, opts.generation.timeout_s);
      for (const auto& missing : spec.missing_services) {
        if (!opts.create_services) throw GenerationError("missing service \"" + missing + "\"");
        auto created = generate_service(request + " (service: " + missing + ")", registry, llm, opts.confirm,
                                        opts.generation.timeout_s);
        spec.services.push_back(created.spec.name);
        entry["created_services"].push_back(created.spec.name);
      }
      spec.missing_services.clear();
      auto gen = generate_task(spec, registry, llm, history, rng, opts.generation);
      auto fx = generate_fixtures(gen.config, registry, &llm, spec.atoms, opts.generation.seed + static_cast<std::uint64_t>(i),
                                  opts.generation.timeout_s);
      gen.config.fixtures = std::move(fx.fixtures);
      entry["status"] = "accepted";
      entry["task_id"] = gen.config.task_id;
      entry["task_name"] = gen.config.task_name;
      entry["category"] = gen.config.category;
      entry["services"] = gen.config.services;
      entry["attempts_used"] = gen.attempts_used;
      entry["focus_action"] = gen.focus_action;
      out.tasks.push_back(std::move(gen.config));
      ++accepted;
    } catch (const TaskDiscarded& e) {
      entry["status"] = "discarded";
      entry["attempts_used"] = static_cast<int>(e.attempts().size());
      entry["issues"] = e.attempts();
      ++discarded;
    } catch (const Error& e) {
      entry["status"] = "discarded";
      entry["error"] = e.what();
      ++discarded;
    }
    entries.push_back(std::move(entry));
  }
  out.manifest = Json{{"request", request},
                      {"count", count},
                      {"accepted", accepted},
                      {"discarded", discarded},
                      {"recent_task_names", Json(std::vector<std::string>(history.recent().begin(), history.recent().end()))},
                      {"entries", entries}};
  return out;
}

}  // namespace clawenv
