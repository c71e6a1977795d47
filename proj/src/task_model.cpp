// SPDX-License-Identifier: Apache-2.0
#include "clawenv/task_model.hpp"

#include "clawenv/errors.hpp"
#include "clawenv/text.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

namespace clawenv {

namespace {

struct CheckKindName {
  CheckKind kind;
  std::string_view name;
};

constexpr std::array<CheckKindName, kCheckKindCount> kCheckKinds{{
    {CheckKind::audit_action_exists, "audit_action_exists"},
    {CheckKind::audit_field_equals, "audit_field_equals"},
    {CheckKind::audit_field_contains, "audit_field_contains"},
    {CheckKind::audit_count_gte, "audit_count_gte"},
    {CheckKind::audit_count_equals, "audit_count_equals"},
    {CheckKind::audit_sequence, "audit_sequence"},
    {CheckKind::keywords_present, "keywords_present"},
    {CheckKind::keywords_absent, "keywords_absent"},
    {CheckKind::pattern_match, "pattern_match"},
    {CheckKind::min_length, "min_length"},
    {CheckKind::file_exists, "file_exists"},
    {CheckKind::file_hash_equals, "file_hash_equals"},
    {CheckKind::exit_code, "exit_code"},
    {CheckKind::test_suite_pass, "test_suite_pass"},
    {CheckKind::llm_judge, "llm_judge"},
}};

}  // namespace

std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::easy: return "easy";
    case Difficulty::medium: return "medium";
    case Difficulty::hard: return "hard";
  }
  return "medium";
}

std::string_view to_string(CheckKind k) {
  for (const auto& e : kCheckKinds) {
    if (e.kind == k) return e.name;
  }
  return "unknown";
}

std::string_view to_string(SafetyKind k) {
  switch (k) {
    case SafetyKind::tool_not_called: return "tool_not_called";
    case SafetyKind::keywords_not_in_output: return "keywords_not_in_output";
    case SafetyKind::unknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(AtomType t) {
  switch (t) {
    case AtomType::action: return "action";
    case AtomType::object: return "object";
    case AtomType::constraint: return "constraint";
  }
  return "action";
}

std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::api_single: return "api_single";
    case TaskKind::api_cross: return "api_cross";
    case TaskKind::file_dependent: return "file_dependent";
    case TaskKind::live_web: return "live_web";
  }
  return "api_single";
}

CheckKind check_kind_from_string(std::string_view s) {
  if (s == "pytest_pass") return CheckKind::test_suite_pass;
  for (const auto& e : kCheckKinds) {
    if (e.name == s) return e.kind;
  }
  return CheckKind::unknown;
}

SafetyKind safety_kind_from_string(std::string_view s) {
  if (s == "tool_not_called") return SafetyKind::tool_not_called;
  if (s == "keywords_not_in_output") return SafetyKind::keywords_not_in_output;
  return SafetyKind::unknown;
}

std::optional<AtomType> atom_type_from_string(std::string_view s) {
  if (s == "action") return AtomType::action;
  if (s == "object") return AtomType::object;
  if (s == "constraint") return AtomType::constraint;
  return std::nullopt;
}

const std::vector<std::string_view>& required_fields(CheckKind k) {
  static const std::vector<std::string_view> none;
  static const std::vector<std::string_view> svc_action{"service", "action"};
  static const std::vector<std::string_view> field_eq{"service", "action", "field", "value"};
  static const std::vector<std::string_view> field_has{"service", "action", "field", "contains"};
  static const std::vector<std::string_view> counted{"service", "action", "count"};
  static const std::vector<std::string_view> sequence{"service", "actions"};
  static const std::vector<std::string_view> keywords{"keywords"};
  static const std::vector<std::string_view> pattern{"pattern"};
  static const std::vector<std::string_view> min_length{"min_length"};
  static const std::vector<std::string_view> path{"path"};
  static const std::vector<std::string_view> hash{"path", "hash"};
  static const std::vector<std::string_view> exit{"cmd", "expected_exit"};
  static const std::vector<std::string_view> test{"test_file"};
  static const std::vector<std::string_view> rubric{"rubric"};
  switch (k) {
    case CheckKind::audit_action_exists: return svc_action;
    case CheckKind::audit_field_equals: return field_eq;
    case CheckKind::audit_field_contains: return field_has;
    case CheckKind::audit_count_gte:
    case CheckKind::audit_count_equals: return counted;
    case CheckKind::audit_sequence: return sequence;
    case CheckKind::keywords_present:
    case CheckKind::keywords_absent: return keywords;
    case CheckKind::pattern_match: return pattern;
    case CheckKind::min_length: return min_length;
    case CheckKind::file_exists: return path;
    case CheckKind::file_hash_equals: return hash;
    case CheckKind::exit_code: return exit;
    case CheckKind::test_suite_pass: return test;
    case CheckKind::llm_judge: return rubric;
    case CheckKind::unknown: return none;
  }
  return none;
}

bool is_audit_check(CheckKind k) {
  switch (k) {
    case CheckKind::audit_action_exists:
    case CheckKind::audit_field_equals:
    case CheckKind::audit_field_contains:
    case CheckKind::audit_count_gte:
    case CheckKind::audit_count_equals:
    case CheckKind::audit_sequence:
      return true;
    default:
      return false;
  }
}

std::vector<std::string> CheckSpec::missing_fields() const {
  std::vector<std::string> missing;
  for (auto f : required_fields(kind)) {
    bool present = true;
    if (f == "service") present = service.has_value();
    else if (f == "action") present = action.has_value();
    else if (f == "field") present = field.has_value();
    else if (f == "value") present = value.has_value();
    else if (f == "contains") present = contains.has_value();
    else if (f == "count") present = count.has_value();
    else if (f == "actions") present = actions.has_value() && !actions->empty();
    else if (f == "keywords") present = keywords.has_value() && !keywords->empty();
    else if (f == "pattern") present = pattern.has_value();
    else if (f == "min_length") present = min_length.has_value();
    else if (f == "path") present = path.has_value();
    else if (f == "hash") present = hash.has_value();
    else if (f == "cmd") present = cmd.has_value();
    else if (f == "expected_exit") present = expected_exit.has_value();
    else if (f == "test_file") present = test_file.has_value();
    else if (f == "rubric") present = rubric.has_value();
    if (!present) missing.emplace_back(f);
  }
  return missing;
}

bool TaskConfig::operator==(const TaskConfig& o) const {
  return task_id == o.task_id && task_name == o.task_name && prompt == o.prompt &&
         difficulty == o.difficulty && category == o.category && services == o.services &&
         tools == o.tools && fixtures == o.fixtures && files == o.files &&
         scoring_components == o.scoring_components && safety_checks == o.safety_checks &&
         max_rounds == o.max_rounds && timeout_s == o.timeout_s && extra == o.extra;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Reader {
public:
  Reader(const Json& obj, std::string where, const LineIndex* lines)
      : obj_(obj), where_(std::move(where)), lines_(lines) {}

  std::string loc(std::string_view key) const {
    return where_.empty() ? std::string(key) : where_ + "." + std::string(key);
  }

  int line(const std::string& locator) const {
    if (!lines_) return 0;
    auto it = lines_->find(locator);
    if (it != lines_->end()) return it->second;
    it = lines_->find(where_);
    return it != lines_->end() ? it->second : 0;
  }

  [[noreturn]] void fail(std::string_view key, const std::string& what) const {
    auto l = loc(key);
    throw ParseError(l, line(l), what);
  }

  bool has(std::string_view key) const {
    auto it = obj_.find(std::string(key));
    return it != obj_.end() && !it->is_null();
  }

  const Json& at(std::string_view key) const { return obj_.at(std::string(key)); }

  std::optional<std::string> str(std::string_view key) {
    used_.insert(std::string(key));
    if (!has(key)) return std::nullopt;
    const Json& v = at(key);
    if (v.is_string()) return v.get<std::string>();
    // Scalars written without quotes (numbers, booleans) are accepted as their text.
    if (v.is_number() || v.is_boolean()) return v.dump();
    fail(key, "expected a string");
  }

  std::optional<double> number(std::string_view key) {
    used_.insert(std::string(key));
    if (!has(key)) return std::nullopt;
    const Json& v = at(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }

  std::optional<std::int64_t> integer(std::string_view key) {
    used_.insert(std::string(key));
    if (!has(key)) return std::nullopt;
    const Json& v = at(key);
    if (v.is_number_integer() || v.is_number_unsigned()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      double d = v.get<double>();
      if (std::floor(d) == d) return static_cast<std::int64_t>(d);
    }
    fail(key, "expected an integer");
  }

  std::optional<std::vector<std::string>> strings(std::string_view key) {
    used_.insert(std::string(key));
    if (!has(key)) return std::nullopt;
    const Json& v = at(key);
    if (v.is_string()) return std::vector<std::string>{v.get<std::string>()};
    if (!v.is_array()) fail(key, "expected a list of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Json& item = v[i];
      if (item.is_string()) out.push_back(item.get<std::string>());
      else if (item.is_number() || item.is_boolean()) out.push_back(item.dump());
      else fail(std::string(key) + "[" + std::to_string(i) + "]", "expected a string");
    }
    return out;
  }

  const Json* array(std::string_view key) {
    used_.insert(std::string(key));
    if (!has(key)) return nullptr;
    const Json& v = at(key);
    if (!v.is_array()) fail(key, "expected a list");
    return &v;
  }

  const Json* object(std::string_view key) {
    used_.insert(std::string(key));
    if (!has(key)) return nullptr;
    const Json& v = at(key);
    if (!v.is_object()) fail(key, "expected a mapping");
    return &v;
  }

  std::optional<Json> raw(std::string_view key) {
    used_.insert(std::string(key));
    auto it = obj_.find(std::string(key));
    if (it == obj_.end()) return std::nullopt;
    return *it;
  }

  /// Keys not consumed by the typed accessors.
  Json leftovers() const {
    Json extra = Json::object();
    for (const auto& [k, v] : obj_.items()) {
      if (!used_.count(k)) extra[k] = v;
    }
    return extra;
  }

private:
  const Json& obj_;
  std::string where_;
  const LineIndex* lines_;
  std::set<std::string> used_;
};

std::string item_loc(const std::string& list, std::size_t i) {
  return list + "[" + std::to_string(i) + "]";
}

void require_object(const Json& v, const std::string& where, const LineIndex* lines) {
  if (v.is_object()) return;
  int line = 0;
  if (lines) {
    auto it = lines->find(where);
    if (it != lines->end()) line = it->second;
  }
  throw ParseError(where, line, "expected a mapping");
}

CheckSpec parse_check(const Json& obj, const std::string& where, const LineIndex* lines) {
  require_object(obj, where, lines);
  Reader r(obj, where, lines);
  CheckSpec c;
  c.type_name = r.str("type").value_or("");
  c.kind = check_kind_from_string(c.type_name);
  c.service = r.str("service");
  c.action = r.str("action");
  c.field = r.str("field");
  c.value = r.raw("value");
  if (c.value && c.value->is_null() && !obj.contains("value")) c.value.reset();
  c.contains = r.str("contains");
  c.count = r.integer("count");
  c.actions = r.strings("actions");
  c.keywords = r.strings("keywords");
  c.pattern = r.str("pattern");
  c.min_length = r.integer("min_length");
  c.path = r.str("path");
  c.hash = r.str("hash");
  c.cmd = r.str("cmd");
  c.expected_exit = r.integer("expected_exit");
  c.test_file = r.str("test_file");
  c.runner = r.str("runner");
  c.rubric = r.str("rubric");
  c.extra = r.leftovers();
  return c;
}

Json check_to_json(const CheckSpec& c) {
  Json j = Json::object();
  j["type"] = c.type_name.empty() ? std::string(to_string(c.kind)) : c.type_name;
  if (c.service) j["service"] = *c.service;
  if (c.action) j["action"] = *c.action;
  if (c.field) j["field"] = *c.field;
  if (c.value) j["value"] = *c.value;
  if (c.contains) j["contains"] = *c.contains;
  if (c.count) j["count"] = *c.count;
  if (c.actions) j["actions"] = *c.actions;
  if (c.keywords) j["keywords"] = *c.keywords;
  if (c.pattern) j["pattern"] = *c.pattern;
  if (c.min_length) j["min_length"] = *c.min_length;
  if (c.path) j["path"] = *c.path;
  if (c.hash) j["hash"] = *c.hash;
  if (c.cmd) j["cmd"] = *c.cmd;
  if (c.expected_exit) j["expected_exit"] = *c.expected_exit;
  if (c.test_file) j["test_file"] = *c.test_file;
  if (c.runner) j["runner"] = *c.runner;
  if (c.rubric) j["rubric"] = *c.rubric;
  for (const auto& [k, v] : c.extra.items()) j[k] = v;
  return j;
}

Difficulty parse_difficulty(Reader& r) {
  auto s = r.str("difficulty");
  if (!s) return Difficulty::medium;
  if (*s == "easy") return Difficulty::easy;
  if (*s == "medium") return Difficulty::medium;
  if (*s == "hard") return Difficulty::hard;
  r.fail("difficulty", "expected one of easy, medium, hard (got \"" + *s + "\")");
}

}  // namespace

Json to_json(const IntentAtom& atom) {
  return Json{{"type", to_string(atom.type)}, {"name", atom.name}, {"description", atom.description}};
}

IntentAtom intent_atom_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("atom", 0, "expected a mapping");
  IntentAtom a;
  auto type = j.value("type", std::string{});
  auto t = atom_type_from_string(type);
  if (!t) throw ParseError("atom.type", 0, "invalid atom type \"" + type + "\"");
  a.type = *t;
  a.name = j.value("name", std::string{});
  if (a.name.empty()) throw ParseError("atom.name", 0, "atom name is empty");
  a.description = j.value("description", std::string{});
  return a;
}

TaskConfig task_config_from_json(const Json& doc, const LineIndex* lines) {
  require_object(doc, "", lines);
  Reader r(doc, "", lines);
  TaskConfig cfg;

  for (std::string_view key : {"task_id", "task_name", "prompt", "scoring_components"}) {
    if (!r.has(key)) cfg.missing_required.emplace_back(key);
  }

  cfg.task_id = r.str("task_id").value_or("");
  cfg.task_name = r.str("task_name").value_or("");
  cfg.prompt = r.str("prompt").value_or("");
  cfg.difficulty = parse_difficulty(r);
  cfg.category = r.str("category").value_or("");
  if (auto mr = r.integer("max_rounds")) {
    if (*mr <= 0) r.fail("max_rounds", "must be positive");
    cfg.max_rounds = static_cast<int>(*mr);
  }
  if (auto t = r.number("timeout_s")) {
    if (*t <= 0) r.fail("timeout_s", "must be positive");
    cfg.timeout_s = *t;
  }

  if (const Json* tools = r.array("tools")) {
    for (std::size_t i = 0; i < tools->size(); ++i) {
      auto where = item_loc("tools", i);
      require_object((*tools)[i], where, lines);
      Reader tr((*tools)[i], where, lines);
      Tool t;
      t.name = tr.str("name").value_or("");
      t.service = tr.str("service").value_or("");
      t.endpoint = tr.str("endpoint").value_or("");
      t.description = tr.str("description").value_or("");
      if (const Json* p = tr.object("params")) t.params = *p;
      t.extra = tr.leftovers();
      cfg.tools.push_back(std::move(t));
    }
  }

  if (auto services = r.strings("services")) {
    cfg.services = *services;
  } else {
    for (const auto& t : cfg.tools) {
      if (!t.service.empty() &&
          std::find(cfg.services.begin(), cfg.services.end(), t.service) == cfg.services.end()) {
        cfg.services.push_back(t.service);
      }
    }
  }

  if (const Json* fx = r.object("fixtures")) {
    for (const auto& [service, records] : fx->items()) {
      auto where = "fixtures." + service;
      if (records.is_null()) {
        cfg.fixtures[service] = {};
        continue;
      }
      if (!records.is_array()) {
        throw ParseError(where, lines && lines->count(where) ? lines->at(where) : 0,
                         "expected a list of records");
      }
      auto& out = cfg.fixtures[service];
      for (std::size_t i = 0; i < records.size(); ++i) {
        require_object(records[i], item_loc(where, i), lines);
        out.push_back(records[i]);
      }
    }
  }

  if (const Json* files = r.array("files")) {
    for (std::size_t i = 0; i < files->size(); ++i) {
      auto where = item_loc("files", i);
      require_object((*files)[i], where, lines);
      Reader fr((*files)[i], where, lines);
      WorkspaceFile f;
      f.path = fr.str("path").value_or("");
      f.content = fr.str("content");
      if (auto b64 = fr.str("content_base64")) {
        try {
          f.content = base64_decode(*b64);
        } catch (const Error& e) {
          fr.fail("content_base64", e.what());
        }
      }
      if (const Json* g = fr.object("generator")) f.generator = *g;
      f.extra = fr.leftovers();
      cfg.files.push_back(std::move(f));
    }
  }

  if (const Json* comps = r.array("scoring_components")) {
    for (std::size_t i = 0; i < comps->size(); ++i) {
      auto where = item_loc("scoring_components", i);
      require_object((*comps)[i], where, lines);
      Reader cr((*comps)[i], where, lines);
      ScoringComponent sc;
      sc.name = cr.str("name").value_or("");
      sc.weight = cr.number("weight").value_or(0.0);
      if (const Json* check = cr.object("check")) {
        sc.check = parse_check(*check, cr.loc("check"), lines);
      }
      sc.extra = cr.leftovers();
      cfg.scoring_components.push_back(std::move(sc));
    }
  }

  if (const Json* checks = r.array("safety_checks")) {
    for (std::size_t i = 0; i < checks->size(); ++i) {
      auto where = item_loc("safety_checks", i);
      require_object((*checks)[i], where, lines);
      Reader sr((*checks)[i], where, lines);
      SafetyCheck s;
      s.type_name = sr.str("type").value_or("");
      s.kind = safety_kind_from_string(s.type_name);
      s.tool_name = sr.str("tool_name");
      s.keywords = sr.strings("keywords");
      s.extra = sr.leftovers();
      cfg.safety_checks.push_back(std::move(s));
    }
  }

  cfg.extra = r.leftovers();
  return cfg;
}

TaskConfig parse_task_config(std::string_view document) {
  LineIndex lines;
  Json doc = parse_yaml(document, &lines);
  return task_config_from_json(doc, &lines);
}

Json to_json(const TaskConfig& cfg) {
  Json j = Json::object();
  j["task_id"] = cfg.task_id;
  j["task_name"] = cfg.task_name;
  j["prompt"] = cfg.prompt;
  j["difficulty"] = to_string(cfg.difficulty);
  if (!cfg.category.empty()) j["category"] = cfg.category;
  j["services"] = cfg.services;
  j["max_rounds"] = cfg.max_rounds;
  j["timeout_s"] = cfg.timeout_s;

  Json tools = Json::array();
  for (const auto& t : cfg.tools) {
    Json tj{{"name", t.name}, {"service", t.service}, {"endpoint", t.endpoint}};
    if (!t.description.empty()) tj["description"] = t.description;
    if (!t.params.empty()) tj["params"] = t.params;
    for (const auto& [k, v] : t.extra.items()) tj[k] = v;
    tools.push_back(std::move(tj));
  }
  j["tools"] = std::move(tools);

  Json fixtures = Json::object();
  for (const auto& [service, records] : cfg.fixtures) {
    Json arr = Json::array();
    for (const auto& rec : records) arr.push_back(rec);
    fixtures[service] = std::move(arr);
  }
  j["fixtures"] = std::move(fixtures);

  Json files = Json::array();
  for (const auto& f : cfg.files) {
    Json fj{{"path", f.path}};
    if (f.content) {
      if (is_valid_utf8(*f.content) && f.content->find('\0') == std::string::npos) {
        fj["content"] = *f.content;
      } else {
        fj["content_base64"] = base64_encode(*f.content);
      }
    }
    if (f.generator) fj["generator"] = *f.generator;
    for (const auto& [k, v] : f.extra.items()) fj[k] = v;
    files.push_back(std::move(fj));
  }
  j["files"] = std::move(files);

  Json comps = Json::array();
  for (const auto& c : cfg.scoring_components) {
    Json cj{{"name", c.name}, {"weight", c.weight}, {"check", check_to_json(c.check)}};
    for (const auto& [k, v] : c.extra.items()) cj[k] = v;
    comps.push_back(std::move(cj));
  }
  j["scoring_components"] = std::move(comps);

  Json safety = Json::array();
  for (const auto& s : cfg.safety_checks) {
    Json sj{{"type", s.type_name.empty() ? std::string(to_string(s.kind)) : s.type_name}};
    if (s.tool_name) sj["tool_name"] = *s.tool_name;
    if (s.keywords) sj["keywords"] = *s.keywords;
    for (const auto& [k, v] : s.extra.items()) sj[k] = v;
    safety.push_back(std::move(sj));
  }
  j["safety_checks"] = std::move(safety);

  for (const auto& [k, v] : cfg.extra.items()) j[k] = v;
  return j;
}

std::string serialize_task_yaml(const TaskConfig& cfg) { return emit_yaml(to_json(cfg)); }

TaskKind classify_task_kind(const TaskConfig& cfg, const LiveWebPredicate& is_live) {
  if (is_live) {
    for (const auto& s : cfg.services) {
      if (is_live(s)) return TaskKind::live_web;
    }
  }
  if (cfg.services.size() >= 2) return TaskKind::api_cross;
  if (cfg.services.size() == 1) return TaskKind::api_single;
  if (!cfg.files.empty()) return TaskKind::file_dependent;
  throw ClassificationError("task \"" + cfg.task_id + "\" has neither services nor files");
}

double llm_judge_cap(TaskKind kind) { return kind == TaskKind::file_dependent ? 0.65 : 0.55; }

double weight_sum(const TaskConfig& cfg) {
  double sum = 0.0;
  for (const auto& c : cfg.scoring_components) sum += c.weight;
  return sum;
}

double llm_judge_weight(const TaskConfig& cfg) {
  double sum = 0.0;
  for (const auto& c : cfg.scoring_components) {
    if (c.check.kind == CheckKind::llm_judge) sum += c.weight;
  }
  return sum;
}

std::string materialize_file(const WorkspaceFile& file) {
  if (file.content) return *file.content;
  if (!file.generator) return {};
  const Json& g = *file.generator;
  const std::string kind = g.value("kind", std::string{});
  auto cell = [](const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  std::string out;
  if (kind == "lines") {
    for (const auto& line : g.value("lines", Json::array())) out += cell(line) + "\n";
  } else if (kind == "csv") {
    auto row_text = [&](const Json& row) {
      std::string s;
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) s += ",";
        s += cell(row[i]);
      }
      return s + "\n";
    };
    if (g.contains("header")) out += row_text(g["header"]);
    for (const auto& row : g.value("rows", Json::array())) out += row_text(row);
  } else if (kind == "repeat") {
    const std::string text = g.value("text", std::string{});
    const auto count = g.value("count", 1);
    for (int i = 0; i < count; ++i) out += text;
  } else {
    throw FixtureError("unknown file generator kind \"" + kind + "\" for " + file.path);
  }
  return out;
}

}  // namespace clawenv
