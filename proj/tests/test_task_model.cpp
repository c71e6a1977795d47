// SPDX-License-Identifier: Apache-2.0
#include "clawenv/errors.hpp"
#include "clawenv/task_model.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace clawenv;
using namespace clawenv::testing;

TEST(TaskModel, Todo001Scoring) {
  auto cfg = golden("todo-001");
  ASSERT_EQ(cfg.scoring_components.size(), 6u);
  const std::vector<double> weights{0.15, 0.20, 0.20, 0.25, 0.10, 0.10};
  for (std::size_t i = 0; i < weights.size(); ++i) EXPECT_DOUBLE_EQ(cfg.scoring_components[i].weight, weights[i]);
  ASSERT_EQ(cfg.safety_checks.size(), 1u);
  EXPECT_EQ(cfg.safety_checks[0].kind, SafetyKind::tool_not_called);
  EXPECT_EQ(cfg.safety_checks[0].tool_name, "delete_task");
  EXPECT_EQ(cfg.tools.size(), 4u);
  EXPECT_EQ(cfg.fixtures.at("todo").size(), 7u);
  EXPECT_EQ(cfg.max_rounds, 20);
  EXPECT_EQ(cfg.timeout_s, 300.0);
}

TEST(TaskModel, Terminal001) {
  auto cfg = golden("terminal-001");
  EXPECT_EQ(cfg.scoring_components.size(), 4u);
  EXPECT_NEAR(llm_judge_weight(cfg), 0.50, 1e-12);
  ASSERT_EQ(cfg.safety_checks.size(), 1u);
  EXPECT_EQ(cfg.safety_checks[0].kind, SafetyKind::keywords_not_in_output);
  ASSERT_EQ(cfg.files.size(), 1u);
  EXPECT_EQ(cfg.files[0].path, "/workspace/task_data.txt");
}

TEST(TaskModel, CrossServiceFixtureCount) {
  auto cfg = golden("calendar_contacts_gmail-001");
  std::size_t n = 0;
  for (const auto& [svc, recs] : cfg.fixtures) n += recs.size();
  EXPECT_EQ(n, 14u);
  EXPECT_EQ(cfg.tools.size(), 6u);
  EXPECT_NEAR(llm_judge_weight(cfg), 0.40, 1e-12);
}

TEST(TaskModel, EmptyComponentsParses) {
  auto cfg = parse_task_config("task_id: a\ntask_name: b\nprompt: c\nscoring_components: []\n");
  EXPECT_TRUE(cfg.scoring_components.empty());
  EXPECT_TRUE(cfg.missing_required.empty());
}

TEST(TaskModel, MissingRequiredRecorded) {
  auto cfg = parse_task_config("task_name: b\n");
  EXPECT_EQ(cfg.missing_required, (std::vector<std::string>{"task_id", "prompt", "scoring_components"}));
}

TEST(TaskModel, TypeErrorHasLine) {
  try {
    parse_task_config("task_id: a\ntask_name: b\nprompt: c\nmax_rounds: lots\nscoring_components: []\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4);
    EXPECT_NE(std::string(e.what()).find("max_rounds"), std::string::npos);
  }
  EXPECT_THROW(parse_task_config("task_id: a\ndifficulty: extreme\n"), ParseError);
  EXPECT_THROW(parse_task_config("- just\n- a list\n"), ParseError);
}

TEST(TaskModel, JsonSurface) {
  auto a = golden("todo-001");
  auto b = parse_task_config(to_json(a).dump());
  EXPECT_EQ(a, b);
}

TEST(TaskModel, RoundTripGoldens) {
  for (const auto* id : {"todo-001", "calendar_contacts_gmail-001", "terminal-001"}) {
    auto a = golden(id);
    auto b = parse_task_config(serialize_task_yaml(a));
    EXPECT_EQ(a, b) << id;
    EXPECT_EQ(serialize_task_yaml(a), serialize_task_yaml(b)) << id;
  }
}

TEST(TaskModel, RoundTripPreservesExtras) {
  const char* doc = R"(task_id: x
task_name: y
prompt: "p: with colon"
owner: team-a
tools:
  - {name: list_tasks, service: todo, endpoint: /todo/tasks, hint: fast}
scoring_components:
  - {name: c, weight: 1.0, check: {type: pytest_pass, test_file: /workspace/t.py, note: legacy}}
safety_checks:
  - {type: keywords_not_in_output, keywords: [secret], severity: high}
)";
  auto a = parse_task_config(doc);
  EXPECT_EQ(a.extra.value("owner", ""), "team-a");
  EXPECT_EQ(a.scoring_components[0].check.kind, CheckKind::test_suite_pass);
  auto b = parse_task_config(serialize_task_yaml(a));
  EXPECT_EQ(a, b);
  EXPECT_EQ(b.tools[0].extra.value("hint", ""), "fast");
}

// Property: random configs survive parse . serialize . parse.
TEST(TaskModel, RoundTripRandom) {
  std::mt19937_64 rng(11);
  const std::vector<std::string> words{"alpha", "beta: x", "γάμμα", "quote\"d", "multi\nline", "#hash", "- dash", "123", "true", ""};
  auto word = [&] { return words[rng() % words.size()]; };
  for (int n = 0; n < 200; ++n) {
    Json doc{{"task_id", "t-" + std::to_string(n)}, {"task_name", word()}, {"prompt", word() + " " + word()}};
    doc["difficulty"] = std::vector<std::string>{"easy", "medium", "hard"}[rng() % 3];
    doc["max_rounds"] = 1 + static_cast<int>(rng() % 40);
    doc["timeout_s"] = 10.0 + static_cast<double>(rng() % 1000) / 4.0;
    Json comps = Json::array();
    for (int i = 0; i < 3; ++i) {
      Json check;
      switch (rng() % 4) {
        case 0: check = {{"type", "keywords_present"}, {"keywords", {word(), word()}}}; break;
        case 1: check = {{"type", "audit_field_equals"}, {"service", "todo"}, {"action", "create_task"}, {"field", "priority"}, {"value", static_cast<int>(rng() % 5)}}; break;
        case 2: check = {{"type", "llm_judge"}, {"rubric", word()}}; break;
        default: check = {{"type", "min_length"}, {"min_length", static_cast<int>(rng() % 500)}}; break;
      }
      comps.push_back({{"name", "c" + std::to_string(i)}, {"weight", 0.25 + static_cast<double>(rng() % 10) / 100.0}, {"check", check}});
    }
    doc["scoring_components"] = comps;
    doc["safety_checks"] = Json::array({{{"type", "keywords_not_in_output"}, {"keywords", {word()}}}});
    doc["fixtures"] = {{"todo", Json::array({{{"task_id", "task-001"}, {"title", word()}, {"tags", {word()}}}})}};
    doc["files"] = Json::array({{{"path", "/workspace/f.txt"}, {"content", word()}}});
    auto a = task_config_from_json(doc);
    auto b = parse_task_config(serialize_task_yaml(a));
    ASSERT_EQ(a, b) << serialize_task_yaml(a);
  }
}

TEST(TaskModel, Classification) {
  EXPECT_EQ(classify_task_kind(golden("todo-001")), TaskKind::api_single);
  EXPECT_EQ(classify_task_kind(golden("calendar_contacts_gmail-001")), TaskKind::api_cross);
  EXPECT_EQ(classify_task_kind(golden("terminal-001")), TaskKind::file_dependent);
  TaskConfig empty;
  EXPECT_THROW(classify_task_kind(empty), ClassificationError);
  TaskConfig web;
  web.services = {"web_real"};
  EXPECT_EQ(classify_task_kind(web, [](std::string_view s) { return s == "web_real"; }), TaskKind::live_web);
}

TEST(TaskModel, JudgeCaps) {
  EXPECT_DOUBLE_EQ(llm_judge_cap(TaskKind::api_single), 0.55);
  EXPECT_DOUBLE_EQ(llm_judge_cap(TaskKind::api_cross), 0.55);
  EXPECT_DOUBLE_EQ(llm_judge_cap(TaskKind::file_dependent), 0.65);
}

TEST(TaskModel, MaterializeGenerators) {
  WorkspaceFile f;
  f.path = "/workspace/a.csv";
  f.generator = Json{{"kind", "csv"}, {"header", {"id", "name"}}, {"rows", {{1, "x"}, {2, "y"}}}};
  EXPECT_EQ(materialize_file(f), "id,name\n1,x\n2,y\n");
  f.generator = Json{{"kind", "repeat"}, {"text", "ab"}, {"count", 3}};
  EXPECT_EQ(materialize_file(f), "ababab");
  f.generator = Json{{"kind", "lines"}, {"lines", {"a", "b"}}};
  EXPECT_EQ(materialize_file(f), "a\nb\n");
  f.generator = Json{{"kind", "nope"}};
  EXPECT_THROW(materialize_file(f), FixtureError);
}

TEST(TaskModel, CheckKindNames) {
  for (int k = 0; k < kCheckKindCount; ++k) {
    auto kind = static_cast<CheckKind>(k);
    EXPECT_EQ(check_kind_from_string(to_string(kind)), kind);
  }
  EXPECT_EQ(check_kind_from_string("pytest_pass"), CheckKind::test_suite_pass);
  EXPECT_EQ(check_kind_from_string("bogus"), CheckKind::unknown);
}
