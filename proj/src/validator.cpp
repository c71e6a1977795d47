// SPDX-License-Identifier: Apache-2.0
#include "clawenv/validator.hpp"

#include "clawenv/assets.hpp"
#include "clawenv/text.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>

namespace clawenv {

Json to_json(const Issue& issue) {
  return Json{{"check_id", issue.check_id}, {"severity", issue.severity}, {"message", issue.message}, {"path", issue.path}};
}

namespace {

constexpr double kEps = 1e-9;

std::string at(std::string_view list, std::size_t i) { return std::string(list) + "[" + std::to_string(i) + "]"; }

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

bool contains(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

/// Actions whose presence in the audit a check demands.
std::vector<std::string> required_actions(const CheckSpec& c) {
  std::vector<std::string> out;
  switch (c.kind) {
    case CheckKind::audit_action_exists:
    case CheckKind::audit_field_equals:
    case CheckKind::audit_field_contains:
      if (c.action) out.push_back(*c.action);
      break;
    case CheckKind::audit_count_gte:
    case CheckKind::audit_count_equals:
      if (c.action && c.count.value_or(1) > 0) out.push_back(*c.action);
      break;
    case CheckKind::audit_sequence:
      if (c.actions) out = *c.actions;
      break;
    default:
      break;
  }
  return out;
}

/// Every /workspace/ path a check mentions, and whether it is an output the agent must create.
void check_refs(const CheckSpec& c, std::vector<std::string>& refs, std::set<std::string>& outputs) {
  auto add = [&](const std::optional<std::string>& s) {
    if (!s) return;
    for (auto& r : workspace_refs(*s)) refs.push_back(std::move(r));
  };
  if ((c.kind == CheckKind::file_exists || c.kind == CheckKind::file_hash_equals) && c.path) {
    for (auto& r : workspace_refs(*c.path)) outputs.insert(r);
  }
  add(c.path);
  add(c.cmd);
  add(c.test_file);
  add(c.rubric);
}

}  // namespace

std::vector<Issue> validate_structure(const TaskConfig& cfg, const ServiceRegistry& registry) {
  std::vector<Issue> issues;
  auto issue = [&](int id, std::string msg, std::string path) {
    issues.push_back(Issue{id, "error", std::move(msg), std::move(path)});
  };

  // 1
  for (const auto& f : cfg.missing_required) issue(1, "Missing required field: " + f, f);
  for (auto [name, value] : {std::pair<const char*, const std::string*>{"task_id", &cfg.task_id},
                             {"task_name", &cfg.task_name},
                             {"prompt", &cfg.prompt}}) {
    if (!contains(cfg.missing_required, name) && trim(*value).empty()) {
      issue(1, std::string("Required field is empty: ") + name, name);
    }
  }

  // 2
  if (cfg.scoring_components.size() < 3) issue(2, "Fewer than 3 components", "scoring_components");

  // 3
  for (std::size_t i = 0; i < cfg.scoring_components.size(); ++i) {
    const double w = cfg.scoring_components[i].weight;
    if (!(w > 0.0) || w > 1.0 + kEps) {
      issue(3, "Weight " + fmt(w) + " outside (0, 1]", at("scoring_components", i) + ".weight");
    }
  }
  const double sum = weight_sum(cfg);
  if (!(sum >= 0.95 - kEps && sum <= 1.05 + kEps)) {
    issue(3, "Sum outside [0.95, 1.05]", "scoring_components");
  }

  // 4
  for (std::size_t i = 0; i < cfg.scoring_components.size(); ++i) {
    const auto& c = cfg.scoring_components[i].check;
    const auto where = at("scoring_components", i) + ".check";
    if (c.kind == CheckKind::unknown) {
      issue(4, "Unknown check type \"" + c.type_name + "\"", where + ".type");
      continue;
    }
    for (const auto& f : c.missing_fields()) {
      issue(4, "Check " + std::string(to_string(c.kind)) + " is missing field \"" + f + "\"", where + "." + f);
    }
    if (c.kind == CheckKind::pattern_match && c.pattern) {
      try {
        std::regex re(*c.pattern);
      } catch (const std::regex_error&) {
        issue(4, "Invalid regular expression", where + ".pattern");
      }
    }
    if ((c.kind == CheckKind::audit_count_gte || c.kind == CheckKind::audit_count_equals) && c.count && *c.count < 0) {
      issue(4, "Negative count", where + ".count");
    }
    if (c.kind == CheckKind::min_length && c.min_length && *c.min_length < 0) {
      issue(4, "Negative min_length", where + ".min_length");
    }
  }

  // 5
  {
    double cap = 0.55;
    try {
      cap = llm_judge_cap(classify_task_kind(cfg, registry.live_web_predicate()));
    } catch (const ClassificationError&) {
    }
    const double jw = llm_judge_weight(cfg);
    if (jw > cap + kEps) {
      issue(5, "LLM judge weight " + fmt(jw) + " exceeds " + fmt(cap), "scoring_components");
    }
  }

  // 6
  if (cfg.safety_checks.empty()) issue(6, "No safety checks", "safety_checks");
  for (std::size_t i = 0; i < cfg.safety_checks.size(); ++i) {
    const auto& s = cfg.safety_checks[i];
    const auto where = at("safety_checks", i);
    if (s.kind == SafetyKind::unknown) {
      issue(6, "Unknown safety check type \"" + s.type_name + "\"", where + ".type");
    } else if (s.kind == SafetyKind::tool_not_called && (!s.tool_name || s.tool_name->empty())) {
      issue(6, "tool_not_called needs tool_name", where + ".tool_name");
    } else if (s.kind == SafetyKind::keywords_not_in_output && (!s.keywords || s.keywords->empty())) {
      issue(6, "keywords_not_in_output needs keywords", where + ".keywords");
    }
  }

  // 7
  for (std::size_t i = 0; i < cfg.safety_checks.size(); ++i) {
    const auto& s = cfg.safety_checks[i];
    if (s.kind != SafetyKind::tool_not_called || !s.tool_name || s.tool_name->empty()) continue;
    const auto& t = *s.tool_name;
    bool known = std::any_of(cfg.tools.begin(), cfg.tools.end(), [&](const Tool& tool) { return tool.name == t; });
    for (const auto& svc : cfg.services) known = known || registry.has_action(svc, t);
    if (!known) issue(7, "Safety check references unknown tool \"" + t + "\"", at("safety_checks", i) + ".tool_name");
  }

  // 8
  for (std::size_t i = 0; i < cfg.services.size(); ++i) {
    if (!registry.contains(cfg.services[i])) {
      issue(8, "Unknown service \"" + cfg.services[i] + "\"", at("services", i));
    }
  }
  for (std::size_t i = 0; i < cfg.tools.size(); ++i) {
    const auto& t = cfg.tools[i];
    if (!contains(cfg.services, t.service)) {
      issue(8, "Tool service \"" + t.service + "\" is not listed in services", at("tools", i) + ".service");
    }
  }
  for (const auto& [svc, _] : cfg.fixtures) {
    if (!registry.contains(svc)) issue(8, "Fixtures for unknown service \"" + svc + "\"", "fixtures." + svc);
  }
  for (std::size_t i = 0; i < cfg.scoring_components.size(); ++i) {
    const auto& c = cfg.scoring_components[i].check;
    if (is_audit_check(c.kind) && c.service && !registry.contains(*c.service)) {
      issue(8, "Check references unknown service \"" + *c.service + "\"", at("scoring_components", i) + ".check.service");
    }
  }

  // 9
  for (std::size_t i = 0; i < cfg.tools.size(); ++i) {
    const auto& t = cfg.tools[i];
    if (!registry.contains(t.service)) continue;
    const EndpointSpec* ep = registry.route(t.service, t.endpoint);
    if (!ep) {
      issue(9, "Endpoint \"" + t.endpoint + "\" is not a route of " + t.service, at("tools", i) + ".endpoint");
    } else if (ep->name != t.name) {
      issue(9, "Tool name \"" + t.name + "\" is not the canonical action of " + t.endpoint + " (" + ep->name + ")",
            at("tools", i) + ".name");
    }
  }
  for (std::size_t i = 0; i < cfg.scoring_components.size(); ++i) {
    const auto& c = cfg.scoring_components[i].check;
    if (!is_audit_check(c.kind) || !c.service || !registry.contains(*c.service)) continue;
    const auto where = at("scoring_components", i) + ".check";
    if (c.action && !registry.has_action(*c.service, *c.action)) {
      issue(9, "Unknown action \"" + *c.action + "\" for " + *c.service, where + ".action");
    }
    if (c.actions) {
      for (std::size_t k = 0; k < c.actions->size(); ++k) {
        if (!registry.has_action(*c.service, (*c.actions)[k])) {
          issue(9, "Unknown action \"" + (*c.actions)[k] + "\" for " + *c.service, at(where + ".actions", k));
        }
      }
    }
  }

  // 10
  if (cfg.services.size() >= 2) {
    std::set<std::string> used;
    for (const auto& t : cfg.tools) used.insert(t.service);
    if (used.size() < 2) issue(10, "Multi-service task uses fewer than 2 services among tools", "tools");
  }

  // 11
  for (std::size_t i = 0; i < cfg.safety_checks.size(); ++i) {
    const auto& s = cfg.safety_checks[i];
    if (s.kind != SafetyKind::tool_not_called || !s.tool_name) continue;
    for (std::size_t k = 0; k < cfg.scoring_components.size(); ++k) {
      if (contains(required_actions(cfg.scoring_components[k].check), *s.tool_name)) {
        issue(11, "Safety forbids " + *s.tool_name + " while scoring requires " + *s.tool_name,
              at("scoring_components", k));
      }
    }
  }

  // 12
  {
    std::vector<std::string> refs = workspace_refs(cfg.prompt);
    std::set<std::string> outputs;
    for (const auto& sc : cfg.scoring_components) check_refs(sc.check, refs, outputs);
    std::vector<std::string> file_paths;
    for (std::size_t i = 0; i < cfg.files.size(); ++i) {
      const auto& p = cfg.files[i].path;
      if (!p.starts_with(kWorkspacePrefix) || p.size() == kWorkspacePrefix.size()) {
        issue(12, "File path \"" + p + "\" is not under /workspace/", at("files", i) + ".path");
      }
      file_paths.push_back(p);
    }
    std::set<std::string> reported;
    for (const auto& r : refs) {
      if (outputs.count(r) || contains(file_paths, r) || reported.count(r)) continue;
      bool dir = std::any_of(file_paths.begin(), file_paths.end(),
                             [&](const std::string& p) { return p.starts_with(r + "/"); });
      if (dir) continue;
      reported.insert(r);
      issue(12, "Reference to " + r + " without a files[] entry", "files");
    }
  }

  return issues;
}

namespace {

std::vector<std::string> name_forms(const std::string& name) {
  std::vector<std::string> forms{name};
  std::string spaced = replace_all(name, "_", " ");
  if (spaced != name) forms.push_back(spaced);
  return forms;
}

bool mentions(std::string_view text, const std::string& name) {
  for (const auto& f : name_forms(name)) {
    if (icontains_word(text, f) || icontains(text, f)) return true;
  }
  return false;
}

std::string check_locator(std::size_t i) { return "scoring_components[" + std::to_string(i) + "].check"; }

std::optional<std::string> cover_action(const TaskConfig& cfg, const IntentAtom& a) {
  auto tool = std::find_if(cfg.tools.begin(), cfg.tools.end(), [&](const Tool& t) { return t.name == a.name; });
  if (tool == cfg.tools.end()) return std::nullopt;
  for (std::size_t i = 0; i < cfg.scoring_components.size(); ++i) {
    const auto& c = cfg.scoring_components[i].check;
    if (contains(required_actions(c), a.name) || (c.action && *c.action == a.name)) return check_locator(i);
    if (c.kind == CheckKind::llm_judge && c.rubric && mentions(*c.rubric, a.name)) return check_locator(i) + ".rubric";
  }
  return std::nullopt;
}

std::optional<std::string> cover_object(const TaskConfig& cfg, const IntentAtom& a) {
  for (const auto& [svc, records] : cfg.fixtures) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (mentions(records[i].dump(), a.name)) return "fixtures." + svc + "[" + std::to_string(i) + "]";
    }
  }
  if (mentions(cfg.prompt, a.name)) return std::string("prompt");
  for (std::size_t i = 0; i < cfg.scoring_components.size(); ++i) {
    const auto& c = cfg.scoring_components[i].check;
    if (c.kind == CheckKind::llm_judge && c.rubric && mentions(*c.rubric, a.name)) return check_locator(i) + ".rubric";
  }
  return std::nullopt;
}

std::optional<std::string> cover_constraint(const TaskConfig& cfg, const IntentAtom& a) {
  const std::string text = a.name + " " + a.description;
  for (std::size_t i = 0; i < cfg.safety_checks.size(); ++i) {
    const auto& s = cfg.safety_checks[i];
    const auto where = "safety_checks[" + std::to_string(i) + "]";
    if (s.kind == SafetyKind::tool_not_called && s.tool_name && mentions(text, *s.tool_name)) return where;
    if (s.kind == SafetyKind::keywords_not_in_output && s.keywords) {
      for (const auto& k : *s.keywords) {
        if (mentions(text, k)) return where;
      }
    }
  }
  for (std::size_t i = 0; i < cfg.scoring_components.size(); ++i) {
    const auto& c = cfg.scoring_components[i].check;
    if ((c.kind == CheckKind::keywords_present || c.kind == CheckKind::keywords_absent) && c.keywords) {
      for (const auto& k : *c.keywords) {
        if (mentions(text, k)) return check_locator(i);
      }
    }
    if (c.kind == CheckKind::llm_judge && c.rubric && mentions(*c.rubric, a.name)) return check_locator(i) + ".rubric";
  }
  return std::nullopt;
}

}  // namespace

CoverageReport verify_coverage(const TaskConfig& cfg, const std::vector<IntentAtom>& atoms) {
  CoverageReport report;
  for (const auto& a : atoms) {
    std::optional<std::string> evidence;
    switch (a.type) {
      case AtomType::action: evidence = cover_action(cfg, a); break;
      case AtomType::object: evidence = cover_object(cfg, a); break;
      case AtomType::constraint: evidence = cover_constraint(cfg, a); break;
    }
    if (evidence) report.covered.emplace_back(a, *evidence);
    else report.uncovered.push_back(a);
  }
  return report;
}

FeasibilityVerdict check_feasibility(const TaskConfig& cfg, const LlmClient& llm, double timeout_s) {
  Json tools = Json::array();
  for (const auto& t : cfg.tools) tools.push_back(t.name + " (" + t.service + " " + t.endpoint + ")");
  Json files = Json::array();
  for (const auto& f : cfg.files) files.push_back(f.path);
  Json fixtures = Json::object();
  for (const auto& [svc, recs] : cfg.fixtures) fixtures[svc] = recs;
  const std::string prompt = render(asset("prompts/feasibility.txt"), {{"prompt", cfg.prompt},
                                                                        {"tools", tools.dump(2)},
                                                                        {"fixtures", fixtures.dump(2)},
                                                                        {"files", files.dump()}});
  FeasibilityVerdict v;
  try {
    ChatResponse res = llm.complete_chat(ChatRequest::simple("", prompt, timeout_s));
    auto j = extract_json_object(res.text);
    if (j && j->contains("feasible") && (*j)["feasible"].is_boolean()) {
      v.feasible = (*j)["feasible"].get<bool>();
      v.reasoning = j->value("reasoning", std::string{});
      return v;
    }
  } catch (const ProviderError&) {
  }
  v.feasible = true;
  v.reasoning = std::string(kJudgeUnavailable);
  v.fallback = true;
  return v;
}

std::vector<Issue> validate_service_spec(const ServiceSpec& spec, const ServiceRegistry& registry) {
  std::vector<Issue> issues;
  auto issue = [&](std::string msg, std::string path) { issues.push_back(Issue{0, "error", std::move(msg), std::move(path)}); };
  static const std::regex name_re("[a-z][a-z0-9_]*");
  if (!std::regex_match(spec.name, name_re)) issue("invalid service name \"" + spec.name + "\"", "name");
  if (registry.contains(spec.name)) issue("duplicate: service \"" + spec.name + "\" already exists", "name");
  const auto n = spec.endpoints.size();
  if (n < 4 || n > 7) issue("endpoint count " + std::to_string(n) + " outside [4, 7]", "endpoints");
  const std::regex path_re("/" + spec.name + "(/[A-Za-z0-9_\\-]+)+");
  std::set<std::string> names, paths;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = spec.endpoints[i];
    const auto where = "endpoints[" + std::to_string(i) + "]";
    if (e.method != "POST") issue("non-POST endpoint " + e.method + " " + e.path, where + ".method");
    if (!std::regex_match(e.path, path_re)) issue("path \"" + e.path + "\" does not match /{service}/{resource}", where + ".path");
    if (e.name.empty()) issue("endpoint without a name", where + ".name");
    if (!names.insert(e.name).second) issue("duplicate action name \"" + e.name + "\"", where + ".name");
    if (!paths.insert(e.path).second) issue("duplicate path \"" + e.path + "\"", where + ".path");
  }
  if (!spec.fixture_schema.is_object() || spec.fixture_schema.empty()) {
    issue("missing fixture_schema", "fixture_schema");
  }
  return issues;
}

}  // namespace clawenv
