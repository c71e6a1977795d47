// SPDX-License-Identifier: Apache-2.0
#include "clawenv/generation.hpp"
#include "clawenv/validator.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace clawenv;
using namespace clawenv::testing;

namespace {

constexpr const char* kGen = "You are generating a task.yaml";
constexpr const char* kFeas = "You are checking whether";
constexpr const char* kParse = "task environment planner";

Json rule(const std::string& contains, Json responses, const std::string& repeat = "last") {
  if (!responses.is_array()) responses = Json::array({responses});
  return Json{{"match", {{"contains", contains}}}, {"responses", responses}, {"repeat", repeat}};
}

Json text(const std::string& t) { return Json{{"text", t}}; }

Json feasible() { return rule(kFeas, Json{{"json", {{"feasible", true}, {"reasoning", "fine"}}}}); }

std::string todo_variant(int i) {
  auto cfg = golden("todo-001");
  char id[32];
  std::snprintf(id, sizeof(id), "todo-%03d", i);
  cfg.task_id = id;
  cfg.task_name = "Sprint review variant " + std::to_string(i);
  return serialize_task_yaml(cfg);
}

std::string todo_bad_weights() {
  auto cfg = golden("todo-001");
  cfg.scoring_components[0].weight = 0.5;
  return serialize_task_yaml(cfg);
}

ParsedSpec todo_spec() {
  ParsedSpec s;
  s.services = {"todo"};
  s.atoms = {{AtomType::action, "list_tasks", ""}, {AtomType::object, "blocker", ""}, {AtomType::constraint, "no_delete_task", ""}};
  s.category = "productivity";
  return s;
}

ServiceRegistry& fresh() {
  static ServiceRegistry r;
  r = ServiceRegistry::builtin();
  return r;
}

Json parcel_spec(bool with_get) {
  Json eps = Json::array({{{"path", "/parcel/shipments"}, {"name", "list_shipments"}, {"params", {{"status", "string?"}}}},
                          {{"path", "/parcel/shipments/get"}, {"name", "get_shipment"}, {"params", {{"shipment_id", "string!"}}}},
                          {{"path", "/parcel/shipments/create"}, {"name", "create_shipment"}, {"params", {{"carrier", "string!"}}}},
                          {{"path", "/parcel/shipments/update"},
                           {"name", "update_shipment"},
                           {"params", {{"shipment_id", "string!"}, {"status", "string?"}}}},
                          {{"path", "/parcel/shipments/cancel"}, {"name", "cancel_shipment"}, {"params", {{"shipment_id", "string!"}}}}});
  if (with_get) eps[0]["method"] = "GET";
  return Json{{"name", "parcel"},
              {"real_service", "parcel tracking"},
              {"description", "Track parcels"},
              {"endpoints", eps},
              {"data_model", "Shipment{shipment_id, carrier, status}"},
              {"fixture_schema",
               {{"collection", "shipments"},
                {"id_field", "shipment_id"},
                {"id_prefix", "shp-"},
                {"count", 4},
                {"fields", {{"carrier", {{"type", "string"}, {"required", true}}}, {"status", {{"type", "string"}}}}}}}};
}

}  // namespace

// --- parser ---

TEST(Parser, MeetingRequest) {
  Json body{{"services", {"calendar", "contacts", "gmail"}},
            {"difficulty", "medium"},
            {"atoms", Json::array({{{"type", "action"}, {"name", "create_event"}, {"description", "schedule the meeting"}},
                                   {{"type", "action"}, {"name", "send_email"}, {"description", "notify attendees"}},
                                   {{"type", "object"}, {"name", "attendees"}, {"description", "people to invite"}},
                                   {{"type", "constraint"}, {"name", "no_delete_event"}, {"description", "should not delete existing events"}}})},
            {"reasoning", "Needs calendar for events, contacts for emails, gmail for notification"}};
  std::shared_ptr<ScriptedStub> stub;
  auto llm = stub_client(Json::array({{{"json", body}}}), &stub);
  auto spec = parse_request("Test if agent can schedule a meeting and notify all attendees", fresh(), *llm);
  EXPECT_EQ(spec.services, (std::vector<std::string>{"calendar", "contacts", "gmail"}));
  ASSERT_EQ(spec.atoms.size(), 4u);
  EXPECT_EQ(spec.atoms[3].type, AtomType::constraint);
  EXPECT_EQ(spec.atoms[3].name, "no_delete_event");
  EXPECT_TRUE(spec.missing_services.empty());
  EXPECT_EQ(stub->calls(), 1);
  EXPECT_EQ(parsed_spec_from_json(to_json(spec)), spec);
  EXPECT_EQ(spec.category, "workflow");
}

TEST(Parser, InvalidAtomRepromptsOnce) {
  Json bad{{"services", {"todo"}}, {"atoms", Json::array({{{"type", "verb"}, {"name", "x"}}})}};
  Json good{{"services", {"todo", "parcel"}}, {"atoms", Json::array({{{"type", "action"}, {"name", "list_tasks"}}})}};
  std::shared_ptr<ScriptedStub> stub;
  auto ok = stub_client(Json::array({{{"json", bad}}, {{"json", good}}}), &stub);
  auto spec = parse_request("r", fresh(), *ok);
  EXPECT_EQ(stub->calls(), 2);
  EXPECT_NE(stub->transcript()[1].request.messages.back().content.find("verb"), std::string::npos);
  EXPECT_EQ(spec.services, std::vector<std::string>{"todo"});
  EXPECT_EQ(spec.missing_services, std::vector<std::string>{"parcel"});

  auto never = stub_client(Json::array({{{"json", bad}}}), &stub);
  EXPECT_THROW(parse_request("r", fresh(), *never), GenerationError);
  EXPECT_EQ(stub->calls(), 2);
  EXPECT_THROW(parse_request("  ", fresh(), *never), GenerationError);
}

// --- task generation ---

TEST(Generate, AcceptsFirstValid) {
  auto llm = stub_client(Json{{"rules", Json::array({rule(kGen, text(todo_variant(1))), feasible()})}});
  GenerationHistory h;
  std::mt19937_64 rng(1);
  auto g = generate_task(todo_spec(), fresh(), *llm, h, rng);
  EXPECT_EQ(g.attempts_used, 1);
  EXPECT_EQ(g.config.task_id, "todo-001");
  EXPECT_TRUE(validate_structure(g.config, fresh()).empty());
  EXPECT_EQ(h.recent().size(), 1u);
  EXPECT_EQ(h.cursor("todo"), 1u);
}

TEST(Generate, CrossServiceGolden) {
  auto doc = slurp(source_path("assets/tasks/calendar_contacts_gmail-001.yaml"));
  auto llm = stub_client(Json{{"rules", Json::array({rule(kGen, text("```yaml\n" + doc + "```")), feasible()})}});
  ParsedSpec s;
  s.services = {"calendar", "contacts", "gmail"};
  s.atoms = {{AtomType::constraint, "no_delete_event", ""}};
  GenerationHistory h;
  std::mt19937_64 rng(1);
  auto g = generate_task(s, fresh(), *llm, h, rng);
  EXPECT_EQ(classify_task_kind(g.config), TaskKind::api_cross);
}

TEST(Generate, FailFailSucceed) {
  std::shared_ptr<ScriptedStub> stub;
  auto llm = stub_client(
      Json{{"rules", Json::array({rule(kGen, Json::array({text(todo_bad_weights()), text(todo_bad_weights()), text(todo_variant(3))})), feasible()})}},
      &stub);
  GenerationHistory h;
  std::mt19937_64 rng(1);
  auto g = generate_task(todo_spec(), fresh(), *llm, h, rng);
  EXPECT_EQ(g.attempts_used, 3);
  // the third prompt carries the validator's feedback
  std::string third;
  int gen_calls = 0;
  for (const auto& ex : stub->transcript()) {
    if (ex.request.messages.back().content.find(kGen) != std::string::npos && ++gen_calls == 3) third = ex.request.messages.back().content;
  }
  EXPECT_NE(third.find("Sum outside [0.95, 1.05]"), std::string::npos);
}

TEST(Generate, DiscardAfterThree) {
  std::shared_ptr<ScriptedStub> stub;
  auto llm = stub_client(Json{{"rules", Json::array({rule(kGen, text(todo_bad_weights())), feasible()})}}, &stub);
  GenerationHistory h;
  std::mt19937_64 rng(1);
  try {
    generate_task(todo_spec(), fresh(), *llm, h, rng);
    FAIL();
  } catch (const TaskDiscarded& e) {
    EXPECT_EQ(e.attempts().size(), 3u);
  }
  EXPECT_EQ(stub->calls(), 3);  // feasibility is never consulted for invalid drafts
  EXPECT_TRUE(h.recent().empty());
  EXPECT_EQ(h.cursor("todo"), 0u);
}

TEST(Generate, InfeasibleIsRetried) {
  std::shared_ptr<ScriptedStub> stub;
  auto llm = stub_client(Json{{"rules", Json::array({rule(kGen, text(todo_variant(1))),
                                                     rule(kFeas, Json::array({{{"json", {{"feasible", false}, {"reasoning", "impossible"}}}},
                                                                              {{"json", {{"feasible", true}, {"reasoning", "ok"}}}}}))})}},
                         &stub);
  GenerationHistory h;
  std::mt19937_64 rng(1);
  EXPECT_EQ(generate_task(todo_spec(), fresh(), *llm, h, rng).attempts_used, 2);
}

TEST(Generate, UncoveredAtomRejected) {
  auto llm = stub_client(Json{{"rules", Json::array({rule(kGen, text(todo_variant(1))), feasible()})}});
  auto spec = todo_spec();
  spec.atoms.push_back({AtomType::object, "kubernetes", ""});
  GenerationHistory h;
  std::mt19937_64 rng(1);
  try {
    generate_task(spec, fresh(), *llm, h, rng);
    FAIL();
  } catch (const TaskDiscarded& e) {
    EXPECT_NE(e.attempts()[0][0].find("kubernetes"), std::string::npos);
  }
}

TEST(Generate, DedupWindowAndRotation) {
  Json docs = Json::array();
  for (int i = 1; i <= 25; ++i) docs.push_back(text(todo_variant(i)));
  std::shared_ptr<ScriptedStub> stub;
  auto llm = stub_client(Json{{"rules", Json::array({rule(kGen, docs, "cycle"), feasible()})}}, &stub);
  GenerationHistory h;
  std::mt19937_64 rng(1);
  std::vector<std::string> names;
  std::map<std::string, int> focus_counts;
  const auto actions = fresh().actions("todo");
  for (int i = 0; i < 25; ++i) {
    auto g = generate_task(todo_spec(), fresh(), *llm, h, rng);
    EXPECT_LE(g.dedup_list.size(), 10u);
    const std::size_t from = names.size() > 10 ? names.size() - 10 : 0;
    EXPECT_EQ(g.dedup_list, std::vector<std::string>(names.begin() + static_cast<long>(from), names.end()));
    EXPECT_EQ(g.focus_action, actions[static_cast<std::size_t>(i) % actions.size()]);
    ++focus_counts[g.focus_action];
    names.push_back(g.config.task_name);
    EXPECT_LE(h.recent().size(), 10u);
  }
  const int m = static_cast<int>(actions.size());
  for (const auto& a : actions) {
    EXPECT_GE(focus_counts[a], 25 / m);
    EXPECT_LE(focus_counts[a], (25 + m - 1) / m);
  }
  // the prompt shows the focus action and the recent names
  std::string last;
  for (const auto& ex : stub->transcript()) {
    const auto& c = ex.request.messages.back().content;
    if (c.find(kGen) != std::string::npos) last = c;
  }
  EXPECT_NE(last.find("Sprint review variant 24"), std::string::npos);
  EXPECT_NE(last.find("Focus action for this task: " + actions[24 % actions.size()]), std::string::npos);
}

TEST(Generate, UnknownServiceRefused) {
  auto llm = stub_client(Json::array({text("x")}));
  ParsedSpec s;
  s.services = {"parcel"};
  GenerationHistory h;
  std::mt19937_64 rng(1);
  EXPECT_THROW(generate_task(s, fresh(), *llm, h, rng), GenerationError);
}

// --- service generation ---

TEST(ServiceGen, Registers) {
  auto& reg = fresh();
  auto llm = stub_client(Json::array({{{"json", parcel_spec(false)}}}));
  auto g = generate_service("simulate a parcel-tracking API", reg, *llm, [](const ServiceSpec&) { return true; });
  EXPECT_EQ(g.attempts_used, 1);
  EXPECT_TRUE(reg.contains("parcel"));
  EXPECT_EQ(reg.actions("parcel").size(), 5u);
}

TEST(ServiceGen, FixedOnSecondAttempt) {
  auto& reg = fresh();
  std::shared_ptr<ScriptedStub> stub;
  auto llm = stub_client(Json::array({{{"json", parcel_spec(true)}}, {{"json", parcel_spec(false)}}}), &stub);
  auto g = generate_service("parcel tracking", reg, *llm, {});
  EXPECT_EQ(g.attempts_used, 2);
  EXPECT_NE(stub->transcript()[1].request.messages.back().content.find("POST"), std::string::npos);
}

TEST(ServiceGen, DeclinedAndRejected) {
  auto& reg = fresh();
  auto llm = stub_client(Json::array({{{"json", parcel_spec(false)}}}));
  EXPECT_THROW(generate_service("parcel", reg, *llm, [](const ServiceSpec&) { return false; }), ServiceDeclined);
  EXPECT_FALSE(reg.contains("parcel"));

  std::shared_ptr<ScriptedStub> stub;
  auto bad = stub_client(Json::array({{{"json", parcel_spec(true)}}}), &stub);
  try {
    generate_service("parcel", reg, *bad, {});
    FAIL();
  } catch (const ServiceRejected& e) {
    EXPECT_EQ(e.attempts().size(), 3u);
  }
  EXPECT_EQ(stub->calls(), 3);
  EXPECT_FALSE(reg.contains("parcel"));
}

// --- fixtures ---

TEST(Fixtures, KeepsGoldenRecords) {
  auto cfg = golden("todo-001");
  auto fx = generate_fixtures(cfg, fresh(), nullptr);
  const auto& recs = fx.fixtures.at("todo");
  ASSERT_EQ(recs.size(), 7u);
  std::set<std::string> statuses, tags;
  for (const auto& r : recs) {
    statuses.insert(r["status"].get<std::string>());
    for (const auto& t : r["tags"]) tags.insert(t.get<std::string>());
  }
  EXPECT_EQ(statuses, (std::set<std::string>{"open", "in-progress", "completed"}));
  EXPECT_TRUE(tags.count("blocker"));
  EXPECT_TRUE(tags.count("urgent"));
}

TEST(Fixtures, Procedural) {
  auto cfg = golden("todo-001");
  cfg.fixtures.clear();
  std::vector<IntentAtom> atoms{{AtomType::object, "Quarterly roadmap", ""}};
  auto fx = generate_fixtures(cfg, fresh(), nullptr, atoms, 3);
  const auto& recs = fx.fixtures.at("todo");
  ASSERT_EQ(recs.size(), 7u);
  const auto schema = fresh().find("todo")->schema;
  std::set<std::string> statuses;
  for (const auto& r : recs) {
    EXPECT_TRUE(check_record(schema, r).empty()) << r.dump();
    statuses.insert(r["status"].get<std::string>());
  }
  EXPECT_EQ(statuses.size(), 3u);
  EXPECT_NE(Json(recs).dump().find("Quarterly roadmap"), std::string::npos);
  EXPECT_EQ(recs[0]["task_id"], "task-001");
  EXPECT_EQ(procedural_records(schema, 7, {}, 3), procedural_records(schema, 7, {}, 3));
}

TEST(Fixtures, ProviderRecordsRegenerated) {
  auto cfg = golden("calendar_contacts_gmail-001");
  cfg.services = {"calendar"};
  cfg.fixtures.clear();
  Json good{{"event_id", "evt-009"}, {"title", "Design review"}, {"start", "2026-03-20T10:00:00"}};
  Json bad{{"event_id", "evt-010"}, {"title", "No start"}};
  Json first{{"records", Json::array()}};
  for (int i = 0; i < 5; ++i) first["records"].push_back(good);
  first["records"].push_back(bad);
  std::shared_ptr<ScriptedStub> stub;
  auto llm = stub_client(Json::array({{{"json", first}}, {{"json", {{"records", Json::array({good})}}}}}), &stub);
  auto fx = generate_fixtures(cfg, fresh(), llm.get());
  EXPECT_EQ(fx.fixtures.at("calendar").size(), 6u);
  EXPECT_EQ(stub->calls(), 2);

  auto never = stub_client(Json::array({{{"json", first}}, {{"json", {{"records", Json::array({bad})}}}}}), &stub);
  try {
    generate_fixtures(cfg, fresh(), never.get());
    FAIL();
  } catch (const FixtureError& e) {
    EXPECT_NE(std::string(e.what()).find("fixtures.calendar[5]"), std::string::npos) << e.what();
  }
  EXPECT_EQ(stub->calls(), 4);  // one batch + three regenerations
}

TEST(Fixtures, FilesAndEmptySchema) {
  auto fx = generate_fixtures(golden("terminal-001"), fresh(), nullptr);
  ASSERT_EQ(fx.files.size(), 1u);
  EXPECT_EQ(fx.files[0].path, "/workspace/task_data.txt");
  EXPECT_TRUE(fx.files[0].content.has_value());

  auto& reg = fresh();
  ServiceSpec ping;
  ping.name = "ping";
  ping.endpoints = {EndpointSpec{"/ping/now", "ping_now"}};
  reg.add(ping);
  TaskConfig cfg;
  cfg.services = {"ping"};
  EXPECT_TRUE(generate_fixtures(cfg, reg, nullptr).fixtures["ping"].empty());
}

// --- benchmark ---

namespace {

Json bench_script(Json gen_responses) {
  Json parsed{{"services", {"todo"}},
              {"difficulty", "medium"},
              {"atoms", Json::array({{{"type", "action"}, {"name", "list_tasks"}}, {{"type", "constraint"}, {"name", "no_delete_task"}}})}};
  return Json{{"rules", Json::array({rule(kParse, Json{{"json", parsed}}), rule(kGen, std::move(gen_responses), "cycle"), feasible()})}};
}

}  // namespace

TEST(Benchmark, RotationInManifest) {
  auto llm = stub_client(bench_script(Json::array({text(todo_variant(1)), text(todo_variant(2)), text(todo_variant(3))})));
  auto res = generate_benchmark("todo sprint reviews", 3, *llm, fresh());
  ASSERT_EQ(res.tasks.size(), 3u);
  std::set<std::string> focus;
  for (const auto& e : res.manifest["entries"]) {
    EXPECT_EQ(e["status"], "accepted");
    EXPECT_EQ(e["attempts_used"], 1);
    focus.insert(e["focus_action"].get<std::string>());
  }
  EXPECT_EQ(focus.size(), 3u);
  EXPECT_EQ(res.manifest["accepted"], 3);
}

TEST(Benchmark, DiscardDoesNotAbort) {
  auto good = [](int i) { return text(todo_variant(i)); };
  auto bad = text(todo_bad_weights());
  auto llm = stub_client(bench_script(Json::array({good(1), good(2), bad, bad, bad, good(4), good(5)})));
  auto res = generate_benchmark("todo", 5, *llm, fresh());
  EXPECT_EQ(res.tasks.size(), 4u);
  EXPECT_EQ(res.manifest["accepted"], 4);
  EXPECT_EQ(res.manifest["discarded"], 1);
  EXPECT_EQ(res.manifest["entries"][2]["status"], "discarded");
  EXPECT_EQ(res.manifest["entries"][2]["issues"].size(), 3u);

  auto one = stub_client(bench_script(Json::array({good(1)})));
  EXPECT_EQ(generate_benchmark("todo", 1, *one, fresh()).tasks.size(), 1u);
  EXPECT_THROW(generate_benchmark("todo", 0, *one, fresh()), GenerationError);
}

TEST(Categories, Lookup) {
  EXPECT_EQ(category_for({"gmail", "calendar", "contacts"}), "workflow");
  EXPECT_EQ(category_for({"nothing"}), "general");
  EXPECT_FALSE(service_categories().empty());
}
