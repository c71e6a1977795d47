// SPDX-License-Identifier: Apache-2.0
//
// The environment triple: prompt (P), tools + fixtures (M), scoring (C).
// Configs are plain values, immutable after parse; share freely across threads.
#pragma once

#include "clawenv/json.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace clawenv {

enum class Difficulty { easy, medium, hard };

enum class CheckKind {
  audit_action_exists,
  audit_field_equals,
  audit_field_contains,
  audit_count_gte,
  audit_count_equals,
  audit_sequence,
  keywords_present,
  keywords_absent,
  pattern_match,
  min_length,
  file_exists,
  file_hash_equals,
  exit_code,
  test_suite_pass,
  llm_judge,
  unknown,
};

inline constexpr int kCheckKindCount = 15;

enum class SafetyKind { tool_not_called, keywords_not_in_output, unknown };

enum class AtomType { action, object, constraint };

enum class TaskKind { api_single, api_cross, file_dependent, live_web };

std::string_view to_string(Difficulty d);
std::string_view to_string(CheckKind k);
std::string_view to_string(SafetyKind k);
std::string_view to_string(AtomType t);
std::string_view to_string(TaskKind k);

/// Accepts the legacy name `pytest_pass` as an alias of test_suite_pass.
CheckKind check_kind_from_string(std::string_view s);
SafetyKind safety_kind_from_string(std::string_view s);
std::optional<AtomType> atom_type_from_string(std::string_view s);

/// Kind-specific fields that must be present (the "key fields" of each check type).
const std::vector<std::string_view>& required_fields(CheckKind k);

/// True for the six audit-log based kinds.
bool is_audit_check(CheckKind k);

struct CheckSpec {
  CheckKind kind = CheckKind::unknown;
  std::string type_name;  // as written in the document

  std::optional<std::string> service;
  std::optional<std::string> action;
  std::optional<std::string> field;
  std::optional<Json> value;
  std::optional<std::string> contains;
  std::optional<std::int64_t> count;
  std::optional<std::vector<std::string>> actions;
  std::optional<std::vector<std::string>> keywords;
  std::optional<std::string> pattern;
  std::optional<std::int64_t> min_length;
  std::optional<std::string> path;
  std::optional<std::string> hash;
  std::optional<std::string> cmd;
  std::optional<std::int64_t> expected_exit;
  std::optional<std::string> test_file;
  std::optional<std::string> runner;  // test_suite_pass override, "{test_file}" is substituted
  std::optional<std::string> rubric;

  Json extra = Json::object();

  /// Names of required fields that are absent.
  std::vector<std::string> missing_fields() const;

  bool operator==(const CheckSpec&) const = default;
};

struct ScoringComponent {
  std::string name;
  double weight = 0.0;
  CheckSpec check;
  Json extra = Json::object();

  bool operator==(const ScoringComponent&) const = default;
};

struct SafetyCheck {
  SafetyKind kind = SafetyKind::unknown;
  std::string type_name;
  std::optional<std::string> tool_name;
  std::optional<std::vector<std::string>> keywords;
  Json extra = Json::object();

  bool operator==(const SafetyCheck&) const = default;
};

struct Tool {
  std::string name;
  std::string service;
  std::string endpoint;
  std::string description;
  Json params = Json::object();  // name -> type/description
  Json extra = Json::object();

  bool operator==(const Tool&) const = default;
};

struct IntentAtom {
  AtomType type = AtomType::action;
  std::string name;
  std::string description;

  bool operator==(const IntentAtom&) const = default;
};

/// Records per service, keyed by service name.
using FixtureSet = std::map<std::string, std::vector<Json>>;

struct WorkspaceFile {
  std::string path;                    // absolute, under /workspace/
  std::optional<std::string> content;  // raw bytes
  std::optional<Json> generator;       // procedural directive, see materialize_file
  Json extra = Json::object();

  bool operator==(const WorkspaceFile&) const = default;
};

struct TaskConfig {
  std::string task_id;
  std::string task_name;
  std::string prompt;
  Difficulty difficulty = Difficulty::medium;
  std::string category;
  std::vector<std::string> services;
  std::vector<Tool> tools;
  FixtureSet fixtures;
  std::vector<WorkspaceFile> files;
  std::vector<ScoringComponent> scoring_components;
  std::vector<SafetyCheck> safety_checks;
  int max_rounds = 20;
  double timeout_s = 300.0;
  Json extra = Json::object();

  /// Required top-level keys absent from the source document. Filled by the parser,
  /// reported by the validator; never serialized.
  std::vector<std::string> missing_required;

  bool operator==(const TaskConfig& o) const;
};

inline constexpr std::string_view kWorkspacePrefix = "/workspace/";

/// Parses a task document (YAML, or JSON as an alternate surface). Defaults applied:
/// max_rounds=20, timeout_s=300, difficulty=medium. Only type-level errors throw.
TaskConfig parse_task_config(std::string_view document);
TaskConfig task_config_from_json(const Json& doc, const LineIndex* lines = nullptr);

Json to_json(const TaskConfig& cfg);
std::string serialize_task_yaml(const TaskConfig& cfg);

Json to_json(const IntentAtom& atom);
IntentAtom intent_atom_from_json(const Json& j);

/// Predicate telling whether a service performs live network access.
using LiveWebPredicate = std::function<bool(std::string_view service)>;

/// api_single: 1 service; api_cross: >=2 services; file_dependent: 0 services and >=1 file;
/// live_web: any service the predicate flags. Throws ClassificationError when there are
/// neither services nor files.
TaskKind classify_task_kind(const TaskConfig& cfg, const LiveWebPredicate& is_live = {});

/// Maximum total llm_judge weight for the given kind.
double llm_judge_cap(TaskKind kind);

double weight_sum(const TaskConfig& cfg);
double llm_judge_weight(const TaskConfig& cfg);

/// Bytes of a workspace file: explicit content, or the output of its generator directive.
/// Directives: {kind: lines, lines: [...]}, {kind: csv, header: [...], rows: [[...]]},
/// {kind: repeat, text: "...", count: n}.
std::string materialize_file(const WorkspaceFile& file);

}  // namespace clawenv
