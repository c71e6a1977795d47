// SPDX-License-Identifier: Apache-2.0
// One PASS/FAIL line per acceptance criterion; exit status is the number of failures.
#include "clawenv/agent_loop.hpp"
#include "clawenv/bench.hpp"
#include "clawenv/generation.hpp"
#include "clawenv/grading.hpp"
#include "clawenv/mock_server.hpp"
#include "clawenv/runner.hpp"
#include "clawenv/validator.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

using namespace clawenv;
using namespace clawenv::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

const ServiceRegistry& reg() {
  static const ServiceRegistry r = ServiceRegistry::builtin();
  return r;
}

Json tool_turn(const std::string& name, const Json& args = Json::object()) {
  return Json{{"text", ""}, {"tool_calls", Json::array({{{"name", name}, {"arguments", args}}})}};
}

Json turn_script(const std::vector<Json>& turns) {
  Json rules = Json::array();
  for (std::size_t i = 0; i < turns.size(); ++i) rules.push_back({{"match", {{"turn", i}}}, {"responses", Json::array({turns[i]})}});
  return Json{{"rules", rules}};
}

RunOptions quick(HarnessTier tier = HarnessTier::native_plugin) {
  RunOptions o;
  o.tier = tier;
  o.error_rate = 0.0;
  o.time_scale = 0.01;
  o.mcp_command = {CLAWENV_CLI, "mcp-serve"};
  return o;
}

std::vector<int> ids(const std::vector<Issue>& issues) {
  std::vector<int> out;
  for (const auto& i : issues) out.push_back(i.check_id);
  return out;
}

// --- 1 ---

void reward_formula(Outcome& o) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int s = (rng() % 4 == 0) ? 0 : 1;
    const double c = u(rng), r = u(rng);
    worst = std::max(worst, std::fabs(final_reward(s, c, r) - oracle::final_reward(s, c, r)));
  }
  const double elapsed = seconds_since(t0);
  o.require(worst <= 1e-9, "grid within 1e-9");
  o.require(final_reward(1, 0.5, 1.0) == 0.6, "anchor 0.6");
  o.require(final_reward(0, 0.9, 1.0) == 0.0, "anchor 0.0");
  o.require(final_reward(1, 1.0, 0.0) == 0.8, "anchor 0.8");
  o.require(elapsed < 1.0, "runtime < 1 s");
  o.detail << "max |diff| " << worst << ", " << elapsed << " s";
}

// --- 2 ---

void validator_goldens(Outcome& o) {
  const auto t0 = Clock::now();
  for (const char* id : {"todo-001", "calendar_contacts_gmail-001", "terminal-001"}) {
    o.require(validate_structure(golden(id), reg()).empty(), std::string(id) + " clean");
  }
  int matched = 0;
  for (int id = 1; id <= 12; ++id) {
    char name[64];
    std::snprintf(name, sizeof(name), "tests/fixtures/mutations/check-%02d.yaml", id);
    const auto got = ids(validate_structure(parse_task_config(slurp(source_path(name))), reg()));
    const bool ok = !got.empty() && std::all_of(got.begin(), got.end(), [&](int g) { return g == id; });
    o.require(ok, std::string(name) + " yields only check " + std::to_string(id));
    matched += ok;
  }
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 1.0, "runtime < 1 s");
  o.detail << "3 goldens, " << matched << "/12 mutations, " << elapsed << " s";
}

// --- 3 ---

void robustness_oracle(Outcome& o) {
  const auto t0 = Clock::now();
  std::uint64_t mismatches = 0;
  const auto visited = oracle::enumerate_audits(12, 3, [&](const std::vector<AuditRecord>& a) {
    if (robustness(a) != oracle::robustness(a)) ++mismatches;
  });
  auto gap = [](int d) {
    std::vector<AuditRecord> a{oracle::sym_record(oracle::rlA, 0)};
    for (int k = 1; k < d; ++k) a.push_back(oracle::sym_record(oracle::okB, k));
    a.push_back(oracle::sym_record(oracle::okA, d));
    return robustness(a);
  };
  const double elapsed = seconds_since(t0);
  o.require(mismatches == 0, "all sequences agree");
  o.require(gap(5) == 1.0, "retry at +5 recovered");
  o.require(gap(6) == 0.0, "retry at +6 not recovered");
  o.require(elapsed < 30.0, "runtime < 30 s");
  o.detail << visited << " audits, " << mismatches << " mismatches, " << elapsed << " s";
}

// --- 4 ---

void injection_statistics(Outcome& o) {
  const auto t0 = Clock::now();
  ErrorInjectionPolicy policy;
  policy.seed = 42;
  policy.time_scale = 0.01;
  ServerOptions so;
  so.port = 0;
  auto handle = start_services(reg(), {}, policy, so, {"todo"});
  constexpr int kRequests = 10000;
  constexpr int kExempt = 300;
  const int threads = 32;
  std::atomic<int> next{0};
  std::atomic<int> transport_errors{0};
  std::atomic<int> exempt_failures{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      httplib::Client c("127.0.0.1", handle->port());
      for (int i = next++; i < kRequests + kExempt; i = next++) {
        if (i < kRequests) {
          if (!c.Post("/todo/tasks", "{}", "application/json")) ++transport_errors;
          continue;
        }
        const char* path = i % 30 == 0 ? "/todo/audit" : (i % 2 == 0 ? "/todo/health" : "/health");
        auto res = c.Get(path);
        if (!res) ++transport_errors;
        else if (res->status != 200) ++exempt_failures;
      }
    });
  }
  for (auto& t : pool) t.join();
  const auto audit = *handle->runtime().read_audit();
  handle->stop();
  int business = 0, injected = 0, rl = 0, se = 0, dl = 0, exempt_injected = 0;
  for (const auto& r : audit) {
    const bool exempt = policy.exempt(r.endpoint);
    if (exempt) {
      exempt_injected += r.injected;
      continue;
    }
    ++business;
    if (!r.injected) continue;
    ++injected;
    if (r.injected_kind == InjectKind::rate_limit) ++rl;
    if (r.injected_kind == InjectKind::server_error) ++se;
    if (r.injected_kind == InjectKind::delay) ++dl;
  }
  const double frac = static_cast<double>(injected) / business;
  const double frl = static_cast<double>(rl) / injected, fse = static_cast<double>(se) / injected,
               fdl = static_cast<double>(dl) / injected;
  const double elapsed = seconds_since(t0);
  o.require(transport_errors == 0, "no transport errors");
  o.require(business == kRequests, "10000 audited requests");
  o.require(frac >= 0.23 && frac <= 0.27, "fraction in [0.23, 0.27]");
  o.require(std::fabs(frl - 0.35) <= 0.03 && std::fabs(fse - 0.35) <= 0.03 && std::fabs(fdl - 0.30) <= 0.03, "split");
  o.require(exempt_injected == 0 && exempt_failures == 0, "exempt paths uninjected");
  o.require(elapsed < 10.0, "runtime < 10 s");
  o.detail << "injected " << frac << " (429 " << frl << ", 500 " << fse << ", delay " << fdl << "), exempt non-200 "
           << exempt_failures + exempt_injected << "/" << kExempt << ", " << elapsed << " s";
}

// --- 5 ---

void end_to_end_determinism(Outcome& o) {
  const auto cfg = golden("todo-001");
  const Json agent_script = script_file("todo_agent.json");
  const Json judge_script = script_file("todo_judge.json");
  ClientFactory agent = [&] { return stub_client(agent_script); };
  ClientFactory judge = [&] { return stub_client(judge_script); };
  std::vector<BenchReport> reports;
  for (int workers : {1, 4}) {
    BenchOptions bo;
    bo.workers = workers;
    bo.run = quick();
    reports.push_back(run_benchmark({cfg}, reg(), agent, judge, bo));
  }
  // used_list_tasks 1, blockers_and_urgent 1, status_breakdown 0.9, priority_risk_analysis 0.7,
  // no_destructive 1, report_completeness 1; no errors injected so robustness is 1.
  const double completion = 0.15 * 1 + 0.20 * 1 + 0.20 * 0.9 + 0.25 * 0.7 + 0.10 * 1 + 0.10 * 1;
  const double hand = 1 * (0.8 * completion + 0.2 * 1.0);
  bool identical = reports[0].records.size() == 3 && reports[1].records.size() == 3;
  bool exact = identical;
  for (std::size_t i = 0; identical && i < 3; ++i) {
    const auto& a = reports[0].records[i];
    const auto& b = reports[1].records[i];
    identical = identical && a.grade && b.grade && *a.grade == *b.grade;
    exact = exact && a.grade && a.grade->final == 0.924 && std::fabs(a.grade->final - hand) < 1e-12;
  }
  o.require(identical, "workers 1 and 4 give identical GradeReports");
  o.require(exact, "final equals the hand value");
  o.detail << "final " << (reports[0].records.empty() || !reports[0].records[0].grade ? -1.0 : reports[0].records[0].grade->final)
           << ", hand " << hand;
}

// --- 6 ---

void pass3_semantics(Outcome& o) {
  auto triple = [](double a, double b, double c) {
    std::vector<GradeReport> rs(3);
    rs[0].final = a;
    rs[1].final = b;
    rs[2].final = c;
    return aggregate_pass3(rs).pass3;
  };
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> step(0, 20);
  int wrong = 0;
  for (int i = 0; i < 5000; ++i) {
    const double a = step(rng) / 20.0, b = step(rng) / 20.0, c = step(rng) / 20.0;
    if (triple(a, b, c) != (std::min({a, b, c}) >= 0.5)) ++wrong;
  }
  o.require(wrong == 0, "pass3 iff min >= 0.5");
  o.require(triple(0.6, 0.7, 0.9), "(0.6, 0.7, 0.9) passes");
  o.require(!triple(0.9, 0.9, 0.4), "(0.9, 0.9, 0.4) fails");
  o.detail << "5000 random triples, " << wrong << " disagreements";
}

// --- 7 ---

std::string judge_variant(bool file, bool over) {
  TaskConfig cfg = golden(file ? "terminal-001" : "todo-001");
  if (file) {
    cfg.scoring_components[0].weight = over ? 0.19 : 0.20;
    cfg.scoring_components[3].weight = over ? 0.66 : 0.65;
  } else {
    cfg.scoring_components[1].weight = over ? 0.09 : 0.10;
    cfg.scoring_components[3].weight = over ? 0.36 : 0.35;
  }
  return serialize_task_yaml(cfg);
}

void judge_caps(Outcome& o) {
  for (bool file : {false, true}) {
    const std::string kind = file ? "file" : "API";
    const auto ok = parse_task_config(judge_variant(file, false));
    const auto bad = parse_task_config(judge_variant(file, true));
    o.require(validate_structure(ok, reg()).empty(), kind + " at cap accepted");
    o.require(ids(validate_structure(bad, reg())) == std::vector<int>{5}, kind + " over cap rejected with check 5");
    o.detail << kind << " judge " << llm_judge_weight(ok) << " ok / " << llm_judge_weight(bad) << " rejected; ";
  }
  // the generator discards a draft over the cap
  ParsedSpec spec;
  spec.services = {"todo"};
  auto llm = stub_client(Json{{"rules", Json::array({{{"match", {{"contains", "You are generating a task.yaml"}}},
                                                      {"responses", Json::array({{{"text", judge_variant(false, true)}}})}}})}});
  GenerationHistory h;
  std::mt19937_64 rng(1);
  bool discarded = false;
  try {
    generate_task(spec, reg(), *llm, h, rng);
  } catch (const TaskDiscarded&) {
    discarded = true;
  }
  o.require(discarded, "generator discards 0.56");
  o.detail << "generator discards 0.56";
}

// --- 8 ---

std::string curl(const std::string& path, const Json& body) {
  return "curl -s -X POST $CLAWENV_API" + path + " -H 'Content-Type: application/json' -d '" + body.dump() + "'";
}

void cross_tier(Outcome& o) {
  const auto cfg = golden("todo-001");
  const Json calls = Json::array({Json::array({"/todo/tasks", "list_tasks", Json::object()}),
                                  Json::array({"/todo/tasks/get", "get_task", {{"task_id", "task-001"}}}),
                                  Json::array({"/todo/tasks/update", "update_task", {{"task_id", "task-003"}, {"status", "open"}}})});
  std::vector<Json> native_turns, shell_turns;
  for (const auto& c : calls) {
    native_turns.push_back(tool_turn(c[1], c[2]));
    shell_turns.push_back(tool_turn("shell", {{"command", curl(c[0], c[2])}}));
  }
  native_turns.push_back(Json{{"text", "done"}});
  shell_turns.push_back(Json{{"text", "done"}});
  std::vector<std::vector<AuditRecord>> logs;
  for (auto tier : {HarnessTier::native_plugin, HarnessTier::mcp_stdio, HarnessTier::skill_document}) {
    auto agent = stub_client(turn_script(tier == HarnessTier::skill_document ? shell_turns : native_turns));
    logs.push_back(execute_task(cfg, reg(), *agent, quick(tier)).audit);
  }
  o.require(logs[0].size() == 3, "three audited calls");
  o.require(same_calls(logs[0], logs[1]), "tier 1 == tier 2");
  o.require(same_calls(logs[0], logs[2]), "tier 1 == tier 3");
  o.detail << "audit sizes " << logs[0].size() << "/" << logs[1].size() << "/" << logs[2].size();
}

// --- 9 ---

std::string todo_variant(int i, double first_weight = 0.15) {
  auto cfg = golden("todo-001");
  cfg.task_name = "Sprint review variant " + std::to_string(i);
  cfg.scoring_components[0].weight = first_weight;
  return serialize_task_yaml(cfg);
}

Json generator_script(Json responses, const std::string& repeat) {
  return Json{{"rules", Json::array({{{"match", {{"contains", "You are generating a task.yaml"}}}, {"responses", responses}, {"repeat", repeat}},
                                     {{"match", {{"contains", "You are checking whether"}}},
                                      {"responses", Json::array({{{"json", {{"feasible", true}}}}})}}})}};
}

void generation_bounds(Outcome& o) {
  ParsedSpec spec;
  spec.services = {"todo"};
  const Json bad{{"text", todo_variant(0, 0.5)}};

  std::shared_ptr<ScriptedStub> stub;
  auto failing = stub_client(generator_script(Json::array({bad}), "last"), &stub);
  GenerationHistory h1;
  std::mt19937_64 rng(1);
  std::size_t attempts = 0;
  try {
    generate_task(spec, reg(), *failing, h1, rng);
  } catch (const TaskDiscarded& e) {
    attempts = e.attempts().size();
  }
  o.require(attempts == 3 && stub->calls() == 3, "always-failing: 3 attempts then discard");

  auto ffs = stub_client(generator_script(Json::array({bad, bad, {{"text", todo_variant(1)}}}), "last"));
  GenerationHistory h2;
  const int used = generate_task(spec, reg(), *ffs, h2, rng).attempts_used;
  o.require(used == 3, "fail-fail-succeed: attempts_used 3");

  Json docs = Json::array();
  for (int i = 1; i <= 25; ++i) docs.push_back({{"text", todo_variant(i)}});
  auto batch = stub_client(generator_script(docs, "cycle"));
  GenerationHistory h3;
  std::size_t longest = 0;
  for (int i = 0; i < 25; ++i) {
    longest = std::max(longest, generate_task(spec, reg(), *batch, h3, rng).dedup_list.size());
    longest = std::max(longest, h3.recent().size());
  }
  o.require(longest <= 10, "dedup list <= 10");
  o.detail << "discard after " << attempts << ", attempts_used " << used << ", max dedup " << longest;
}

// --- 10 ---

class PingExecutor : public ToolExecutor {
public:
  std::vector<ToolDefinition> definitions() override { return {ToolDefinition{"ping", "ping"}}; }
  ToolResult execute(const ToolCall& call) override { return ToolResult{call.id, call.name, 200, "ok"}; }
};

void loop_bounds(Outcome& o) {
  std::shared_ptr<ScriptedStub> stub;
  auto endless = stub_client(Json::array({tool_turn("ping")}), &stub);
  PingExecutor ex;
  const auto t = run_agent_loop("go", ex, *endless);
  o.require(t.rounds_used == 20 && stub->calls() == 20 && t.stop_reason == "max_rounds", "stops at 20 rounds");

  auto cfg = golden("todo-001");
  cfg.timeout_s = 100;
  auto sleeper = stub_client(turn_script({tool_turn("list_tasks"), Json{{"sleep_s", 60.0}, {"text", "never"}}}), nullptr, 0.01);
  auto opts = quick();
  opts.turn_timeout_s = 50;
  const auto t0 = Clock::now();
  const auto r = execute_task(cfg, reg(), *sleeper, opts);
  const double elapsed = seconds_since(t0);
  const auto rep = grade(cfg, r, nullptr);
  o.require(r.trajectory.timed_out && r.trajectory.stop_reason == "timeout", "sleeping stub times out");
  o.require(r.audit.size() == 1, "partial audit kept");
  o.require(rep.timed_out && rep.final > 0.0, "graded report on the partial audit");
  o.detail << "rounds " << t.rounds_used << "; timeout after " << elapsed << " s, final " << rep.final;
}

// --- 11 ---

Json errors_then_ok(int status, int n) {
  Json seq = Json::array();
  for (int i = 0; i < n; ++i) seq.push_back({{"error", {{"status", status}}}});
  seq.push_back({{"text", "ok"}});
  return seq;
}

void retry_policy(Outcome& o) {
  for (int status : {429, 500, 502, 503, 529}) {
    for (int n = 0; n <= 5; ++n) {
      auto c = stub_client(errors_then_ok(status, n));
      bool ok = false;
      try {
        ok = c->complete_chat(ChatRequest::simple("", "hi")).attempts_used == n + 1;
      } catch (const ProviderError&) {
      }
      o.require(ok, std::to_string(status) + " x" + std::to_string(n) + " recovers");
    }
  }
  auto attempts_until_failure = [](int status, int n) {
    std::shared_ptr<ScriptedStub> stub;
    auto c = stub_client(errors_then_ok(status, n), &stub);
    try {
      c->complete_chat(ChatRequest::simple("", "hi"));
    } catch (const ProviderError& e) {
      return e.attempts() == stub->calls() ? e.attempts() : -1;
    }
    return 0;
  };
  const int auth = attempts_until_failure(401, 1);
  const int six = attempts_until_failure(503, 6);
  o.require(auth == 1, "401 fails after 1 attempt");
  o.require(six == 6, "six 503s exhaust after 6 attempts");
  o.detail << "5 statuses x 0..5 failures recover; 401 attempts " << auth << "; six 503 attempts " << six;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"reward formula", reward_formula},
      {"validator goldens and mutations", validator_goldens},
      {"robustness oracle", robustness_oracle},
      {"injection statistics", injection_statistics},
      {"end-to-end determinism", end_to_end_determinism},
      {"pass^3 semantics", pass3_semantics},
      {"judge cap enforcement", judge_caps},
      {"cross-tier audit equivalence", cross_tier},
      {"generation loop bounds", generation_bounds},
      {"agent loop bounds", loop_bounds},
      {"retry policy", retry_policy},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail.str() << std::endl;
  }
  return failures;
}
