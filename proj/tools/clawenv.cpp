// SPDX-License-Identifier: Apache-2.0
#include "clawenv/assets.hpp"
#include "clawenv/bench.hpp"
#include "clawenv/errors.hpp"
#include "clawenv/generation.hpp"
#include "clawenv/harness.hpp"
#include "clawenv/mock_server.hpp"
#include "clawenv/quality.hpp"
#include "clawenv/runner.hpp"
#include "clawenv/validator.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

using namespace clawenv;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kTaskFailures = 1;
constexpr int kConfigError = 2;

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& p, const std::string& s) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << s;
}

TaskConfig load_task(const fs::path& p) {
  try {
    return parse_task_config(read_file(p));
  } catch (const ParseError& e) {
    throw Error(p.string() + ": " + e.what());
  }
}

std::vector<fs::path> task_files(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) throw Error(dir.string() + " is not a directory");
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".yaml" || ext == ".yml" || ext == ".json")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct ProviderFlags {
  std::string script;
  std::string model;
  std::string judge_script;
  std::string judge_model;
  double time_scale = 1.0;
  std::uint64_t seed = 0;
};

RetryPolicy retry_policy(const ProviderFlags& f) {
  RetryPolicy p;
  p.time_scale = f.time_scale;
  return p;
}

ClientFactory make_factory(const std::string& script, const std::string& model, const ProviderFlags& f,
                           bool required, const char* role) {
  if (!script.empty()) {
    const Json parsed = parse_yaml(read_file(script));
    return [parsed, f] {
      return std::make_shared<LlmClient>(std::make_shared<ScriptedStub>(parsed), retry_policy(f), f.seed);
    };
  }
  ProviderConfig cfg = ProviderConfig::from_env(model);
  if (cfg.api_key.empty()) {
    if (required) {
      throw Error(std::string("no ") + role +
                  " provider: pass a script or set CLAWENV_API_KEY / OPENROUTER_API_KEY / OPENAI_API_KEY");
    }
    return {};
  }
  auto client = std::make_shared<LlmClient>(std::make_shared<HttpProvider>(cfg), retry_policy(f), f.seed);
  client->model = cfg.model;
  return [client] { return client; };
}

ClientFactory judge_factory(const ProviderFlags& f) {
  std::string model = f.judge_model;
  if (model.empty() && f.judge_script.empty()) {
    model = Json::parse(asset("config/models.json")).value("judge", std::string{});
  }
  auto factory = make_factory(f.judge_script, model, f, false, "judge");
  if (!factory) std::cerr << "warning: no judge configured, llm_judge components score 0.5\n";
  return factory;
}

void add_provider_flags(CLI::App* cmd, ProviderFlags& f, bool agent, bool judge) {
  if (agent) {
    cmd->add_option("--script", f.script, "Scripted stub for the model (JSON or YAML)");
    cmd->add_option("--model", f.model, "Model preset or id");
  }
  if (judge) {
    cmd->add_option("--judge-script", f.judge_script, "Scripted stub for the judge");
    cmd->add_option("--judge-model", f.judge_model, "Judge model preset or id");
  }
  cmd->add_option("--time-scale", f.time_scale, "Multiplier for every wait and timeout")->check(CLI::PositiveNumber);
}

ServiceRegistry load_registry(const std::string& services_dir) {
  ServiceRegistry reg = ServiceRegistry::builtin();
  if (!services_dir.empty() && fs::is_directory(services_dir)) reg.load_directory(services_dir);
  return reg;
}

TimeoutMode timeout_mode(const std::string& s) {
  if (s == "zero") return TimeoutMode::zero;
  if (s == "partial") return TimeoutMode::partial;
  throw Error("--timeout-mode must be zero or partial");
}

// --- validate ---

int cmd_validate(const std::vector<std::string>& files, const std::string& services_dir, bool json_out) {
  const auto registry = load_registry(services_dir);
  int rc = kOk;
  for (const auto& f : files) {
    TaskConfig cfg;
    try {
      cfg = load_task(f);
    } catch (const Error& e) {
      std::cerr << e.what() << "\n";
      rc = kConfigError;
      continue;
    }
    const auto issues = validate_structure(cfg, registry);
    if (json_out) {
      Json arr = Json::array();
      for (const auto& i : issues) arr.push_back(to_json(i));
      std::cout << Json{{"file", f}, {"task_id", cfg.task_id}, {"valid", issues.empty()}, {"issues", arr}}.dump() << "\n";
    } else if (issues.empty()) {
      std::cout << f << ": ok\n";
    } else {
      std::cout << f << ": " << issues.size() << " issue(s)\n";
      for (const auto& i : issues) {
        std::cout << "  [check " << i.check_id << "] " << (i.path.empty() ? "" : i.path + ": ") << i.message << "\n";
      }
    }
    if (!issues.empty() && rc == kOk) rc = kTaskFailures;
  }
  return rc;
}

// --- serve ---

struct ServeFlags {
  std::string task;
  std::string fixtures;
  std::vector<std::string> services;
  int port = kDefaultPort;
  double error_rate = 0.25;
  std::uint64_t seed = 0;
  double time_scale = 1.0;
  bool allow_net = false;
  std::string services_dir;
};

int cmd_serve(const ServeFlags& f) {
  const auto registry = load_registry(f.services_dir);
  FixtureSet fixtures;
  std::vector<std::string> services = f.services;
  if (!f.task.empty()) {
    TaskConfig cfg = load_task(f.task);
    fixtures = cfg.fixtures;
    if (services.empty()) services = cfg.services;
  }
  if (!f.fixtures.empty()) {
    Json doc = parse_yaml(read_file(f.fixtures));
    if (!doc.is_object()) throw Error(f.fixtures + ": expected a mapping of service to records");
    for (const auto& [svc, recs] : doc.items()) {
      if (!recs.is_array()) throw Error("fixtures." + svc + ": expected a list of records");
      fixtures[svc] = recs.get<std::vector<Json>>();
    }
  }
  ErrorInjectionPolicy policy;
  policy.rate = f.error_rate;
  policy.seed = f.seed;
  policy.time_scale = f.time_scale;
  ServerOptions opts;
  opts.port = f.port;
  auto handle = start_services(registry, fixtures, policy, opts, services, f.allow_net);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const auto& mounted = handle->runtime().services();
  std::cout << "serving " << mounted.size() << " service(s) on " << handle->base_url() << "\n";
  std::cout << "audit: " << handle->base_url() << "/audit\n";
  for (const auto& s : mounted) std::cout << "  " << s << ": " << handle->base_url() << "/" << s << "/audit\n";
  std::cout << std::flush;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  handle->stop();
  return kOk;
}

// --- run / grade ---

struct RunFlags {
  std::string task;
  std::string out;
  std::string tier = "native_plugin";
  double error_rate = 0.25;
  std::uint64_t seed = 0;
  double timeout = 0;
  std::string timeout_mode = "partial";
  bool allow_net = false;
  bool no_grade = false;
  std::string services_dir;
};

int cmd_run(const RunFlags& f, ProviderFlags pf) {
  const auto registry = load_registry(f.services_dir);
  TaskConfig cfg = load_task(f.task);
  const auto issues = validate_structure(cfg, registry);
  if (!issues.empty()) {
    std::cerr << f.task << ": invalid task (" << issues.size() << " issue(s)); run validate for details\n";
    return kConfigError;
  }
  pf.seed = f.seed;
  auto agent = make_factory(pf.script, pf.model, pf, true, "agent")();
  RunOptions ro;
  ro.tier = harness_tier_from_string(f.tier);
  ro.error_rate = f.error_rate;
  ro.seed = f.seed;
  ro.time_scale = pf.time_scale;
  ro.timeout_s = f.timeout;
  ro.allow_net = f.allow_net;
  ro.model = agent->model;
  RunResult result;
  try {
    result = execute_task(cfg, registry, *agent, ro);
  } catch (const SandboxError& e) {
    std::cerr << "task failed: " << e.what() << "\n";
    return kTaskFailures;
  }
  std::optional<GradeReport> report;
  if (!f.no_grade) {
    auto judge = judge_factory(pf);
    auto judge_client = judge ? judge() : nullptr;
    GradeOptions go;
    go.timeout_mode = timeout_mode(f.timeout_mode);
    report = grade(cfg, result, judge_client.get(), go);
  }
  Json meta{{"task_id", cfg.task_id}, {"tier", to_string(ro.tier)}, {"model", agent->model}, {"seed", f.seed}};
  const fs::path out = f.out.empty() ? fs::path("runs") / cfg.task_id : fs::path(f.out);
  write_run_artifacts(out, cfg, result, report ? &*report : nullptr, meta);
  std::cerr << "artifacts: " << out.string() << "\n";
  if (report) std::cout << to_json(*report).dump() << "\n";
  return kOk;
}

int cmd_grade(const std::vector<std::string>& dirs, const ProviderFlags& pf, const std::string& mode) {
  auto judge = judge_factory(pf);
  GradeOptions go;
  go.timeout_mode = timeout_mode(mode);
  int rc = kOk;
  for (const auto& d : dirs) {
    try {
      LoadedRun run = load_run_artifacts(d);
      auto judge_client = judge ? judge() : nullptr;
      GradeReport report = grade(run.task, run.result, judge_client.get(), go);
      write_file(fs::path(d) / "grade.json", to_json(report).dump(2) + "\n");
      std::cout << to_json(report).dump() << "\n";
    } catch (const std::exception& e) {
      std::cerr << d << ": " << e.what() << "\n";
      rc = kConfigError;
    }
  }
  return rc;
}

// --- bench / report ---

struct BenchFlags {
  std::string task_dir;
  std::string out = "bench";
  int workers = 1;
  int runs = 3;
  std::uint64_t seed = 0;
  double threshold = 0.5;
  std::string tier = "native_plugin";
  double error_rate = 0.25;
  double timeout = 0;
  std::string timeout_mode = "partial";
  bool allow_net = false;
  std::string services_dir;
};

void write_bench_outputs(const fs::path& out, const std::vector<RunRecord>& records,
                         const std::vector<AggregateReport>& aggregates, const Json& summary) {
  std::string lines;
  for (const auto& r : records) lines += to_json(r).dump() + "\n";
  write_file(out / "runs.jsonl", lines);
  lines.clear();
  for (const auto& a : aggregates) lines += to_json(a).dump() + "\n";
  write_file(out / "aggregates.jsonl", lines);
  write_file(out / "summary.json", summary.dump(2) + "\n");
  write_file(out / "summary.txt", render_summary(summary));
}

int cmd_bench(const BenchFlags& f, ProviderFlags pf) {
  const auto registry = load_registry(f.services_dir);
  std::vector<TaskConfig> tasks;
  std::set<std::string> ids;
  for (const auto& p : task_files(f.task_dir)) {
    TaskConfig cfg = load_task(p);
    const auto issues = validate_structure(cfg, registry);
    if (!issues.empty()) {
      std::cerr << p.string() << ": invalid task, skipped (" << issues.front().message << ")\n";
      continue;
    }
    if (!ids.insert(cfg.task_id).second) throw Error("duplicate task_id " + cfg.task_id);
    tasks.push_back(std::move(cfg));
  }
  const fs::path out = f.out;
  if (tasks.empty()) {
    std::cerr << "warning: no tasks found in " << f.task_dir << "\n";
    Json summary = summarize({}, {});
    write_bench_outputs(out, {}, {}, summary);
    std::cout << render_summary(summary);
    return kOk;
  }
  pf.seed = f.seed;
  BenchOptions bo;
  bo.workers = f.workers;
  bo.runs = f.runs;
  bo.seed = f.seed;
  bo.threshold = f.threshold;
  bo.run.tier = harness_tier_from_string(f.tier);
  bo.run.error_rate = f.error_rate;
  bo.run.time_scale = pf.time_scale;
  bo.run.timeout_s = f.timeout;
  bo.run.allow_net = f.allow_net;
  bo.grade.timeout_mode = timeout_mode(f.timeout_mode);
  bo.out_dir = out;
  bo.model_label = pf.script.empty() ? ProviderConfig::from_env(pf.model).model : "script:" + fs::path(pf.script).filename().string();
  auto agent = make_factory(pf.script, pf.model, pf, true, "agent");
  auto judge = judge_factory(pf);
  BenchReport report = run_benchmark(tasks, registry, agent, judge, bo);
  write_bench_outputs(out, report.records, report.aggregates, report.summary);
  std::cout << render_summary(report.summary);
  for (const auto& r : report.records) {
    if (!r.error.empty()) std::cerr << r.task_id << " run " << r.run << ": " << r.error << "\n";
  }
  return report.summary.value("failed_runs", 0) > 0 ? kTaskFailures : kOk;
}

int cmd_report(const std::string& dir, double threshold, bool json_out) {
  const fs::path runs = fs::path(dir) / "runs.jsonl";
  std::ifstream in(runs);
  if (!in) throw Error("cannot read " + runs.string());
  std::vector<RunRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) records.push_back(run_record_from_json(Json::parse(line)));
  }
  auto aggregates = aggregate_records(records, threshold);
  Json summary = summarize(records, aggregates);
  std::vector<std::pair<RunResult, GradeReport>> graded;
  for (const auto& r : records) {
    if (!r.grade || r.artifacts.empty() || !fs::exists(r.artifacts)) continue;
    graded.emplace_back(load_run_artifacts(r.artifacts).result, *r.grade);
  }
  summary["triage"] = to_json(triage_false_negatives(graded));
  if (json_out) {
    std::cout << summary.dump(2) << "\n";
  } else {
    std::cout << render_summary(summary);
    const auto& counts = summary["triage"].value("counts", Json::object());
    if (!counts.empty()) {
      std::cout << "possible false negatives:";
      for (const auto& [k, v] : counts.items()) std::cout << " " << k << "=" << v.get<int>();
      std::cout << "\n";
    }
  }
  return kOk;
}

// --- generate / quality ---

struct GenerateFlags {
  std::string request;
  int count = 1;
  std::uint64_t seed = 0;
  std::string out = "tasks";
  bool yes = false;
  bool create_services = false;
  bool no_feasibility = false;
  std::string services_dir = "services";
};

int cmd_generate(const GenerateFlags& f, ProviderFlags pf) {
  ServiceRegistry registry = load_registry(f.services_dir);
  const auto before = registry.names();
  pf.seed = f.seed;
  auto llm = make_factory(pf.script, pf.model, pf, true, "generator")();
  BenchmarkOptions bo;
  bo.generation.seed = f.seed;
  bo.generation.check_feasibility = !f.no_feasibility;
  bo.create_services = f.create_services;
  bo.confirm = f.yes ? ConfirmHook([](const ServiceSpec&) { return true; }) : ConfirmHook(terminal_confirm);
  BenchmarkResult res = generate_benchmark(f.request, f.count, *llm, registry, bo);
  const fs::path out = f.out;
  fs::create_directories(out);
  std::set<std::string> used;
  for (std::size_t i = 0; i < res.tasks.size(); ++i) {
    std::string name = res.tasks[i].task_id.empty() ? "task-" + std::to_string(i + 1) : res.tasks[i].task_id;
    std::string stem = name;
    for (int k = 2; used.count(stem) || fs::exists(out / (stem + ".yaml")); ++k) stem = name + "-" + std::to_string(k);
    used.insert(stem);
    res.tasks[i].task_id = stem;
    write_file(out / (stem + ".yaml"), serialize_task_yaml(res.tasks[i]));
  }
  for (const auto& name : registry.names()) {
    if (std::find(before.begin(), before.end(), name) == before.end()) {
      save_service_spec(f.services_dir, registry.find(name)->spec);
    }
  }
  write_file(out / "manifest.json", res.manifest.dump(2) + "\n");
  std::cout << res.manifest.value("accepted", 0) << " accepted, " << res.manifest.value("discarded", 0)
            << " discarded -> " << out.string() << "\n";
  return res.manifest.value("discarded", 0) > 0 ? kTaskFailures : kOk;
}

int cmd_quality(const std::vector<std::string>& files, ProviderFlags pf, const std::string& services_dir) {
  const auto registry = load_registry(services_dir);
  auto judge = judge_factory(pf);
  if (!judge) throw Error("quality needs a judge: pass --judge-script or configure a provider");
  auto client = judge();
  for (const auto& f : files) {
    TaskConfig cfg = load_task(f);
    std::cout << to_json(assess_quality(cfg, registry, *client)).dump() << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate, validate, execute and grade agent task environments"};
  app.require_subcommand(1);

  ProviderFlags pf;

  std::vector<std::string> validate_files;
  bool validate_json = false;
  std::string services_dir;
  auto* validate = app.add_subcommand("validate", "Run the structural checks on task documents");
  validate->add_option("files", validate_files, "Task documents")->required();
  validate->add_flag("--json", validate_json, "One JSON record per file");
  validate->add_option("--services-dir", services_dir, "Extra service specs");

  ServeFlags sf;
  auto* serve = app.add_subcommand("serve", "Serve mock services until interrupted");
  serve->add_option("--task", sf.task, "Task document supplying fixtures and services");
  serve->add_option("--fixtures", sf.fixtures, "Fixture file (service -> records)");
  serve->add_option("--services", sf.services, "Services to mount (default: all)")->delimiter(',');
  serve->add_option("--port", sf.port, "Listen port (0 = any)");
  serve->add_option("--error-rate", sf.error_rate, "Injection rate")->check(CLI::Range(0.0, 1.0));
  serve->add_option("--seed", sf.seed, "Injection seed");
  serve->add_option("--time-scale", sf.time_scale, "Scale for injected delays")->check(CLI::PositiveNumber);
  serve->add_flag("--allow-net", sf.allow_net, "Let web_real fetch live pages");
  serve->add_option("--services-dir", sf.services_dir, "Extra service specs");

  RunFlags rf;
  auto* run = app.add_subcommand("run", "Execute one task and grade it");
  run->add_option("task", rf.task, "Task document")->required();
  run->add_option("--out", rf.out, "Artifact directory (default runs/<task_id>)");
  run->add_option("--tier", rf.tier, "native_plugin | mcp_stdio | skill_document");
  run->add_option("--error-rate", rf.error_rate, "Injection rate")->check(CLI::Range(0.0, 1.0));
  run->add_option("--seed", rf.seed, "Injection seed");
  run->add_option("--timeout", rf.timeout, "Task timeout in seconds (default: the task's)");
  run->add_option("--timeout-mode", rf.timeout_mode, "partial | zero");
  run->add_flag("--allow-net", rf.allow_net, "Allow outbound network (live-web tasks)");
  run->add_flag("--no-grade", rf.no_grade, "Skip grading");
  run->add_option("--services-dir", rf.services_dir, "Extra service specs");
  add_provider_flags(run, pf, true, true);

  std::vector<std::string> grade_dirs;
  std::string grade_mode = "partial";
  auto* grade_cmd = app.add_subcommand("grade", "Grade persisted run artifacts");
  grade_cmd->add_option("runs", grade_dirs, "Run artifact directories")->required();
  grade_cmd->add_option("--timeout-mode", grade_mode, "partial | zero");
  add_provider_flags(grade_cmd, pf, false, true);

  BenchFlags bf;
  auto* bench = app.add_subcommand("bench", "Run every task several times and aggregate");
  bench->add_option("task_dir", bf.task_dir, "Directory of task documents")->required();
  bench->add_option("--out", bf.out, "Output directory");
  bench->add_option("--workers", bf.workers, "Parallel runs")->check(CLI::PositiveNumber);
  bench->add_option("--runs", bf.runs, "Runs per task")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bf.seed, "Base seed");
  bench->add_option("--threshold", bf.threshold, "Pass threshold")->check(CLI::Range(0.0, 1.0));
  bench->add_option("--tier", bf.tier, "native_plugin | mcp_stdio | skill_document");
  bench->add_option("--error-rate", bf.error_rate, "Injection rate")->check(CLI::Range(0.0, 1.0));
  bench->add_option("--timeout", bf.timeout, "Task timeout in seconds");
  bench->add_option("--timeout-mode", bf.timeout_mode, "partial | zero");
  bench->add_flag("--allow-net", bf.allow_net, "Allow outbound network (live-web tasks)");
  bench->add_option("--services-dir", bf.services_dir, "Extra service specs");
  add_provider_flags(bench, pf, true, true);

  std::string report_dir;
  double report_threshold = 0.5;
  bool report_json = false;
  auto* report = app.add_subcommand("report", "Summarize a bench directory from its run records");
  report->add_option("dir", report_dir, "Bench output directory")->required();
  report->add_option("--threshold", report_threshold, "Pass threshold");
  report->add_flag("--json", report_json, "Machine-readable output");

  GenerateFlags gf;
  auto* generate = app.add_subcommand("generate", "Generate task environments from a request");
  generate->add_option("--request", gf.request, "Natural-language request")->required();
  generate->add_option("--count", gf.count, "Number of tasks")->check(CLI::PositiveNumber);
  generate->add_option("--seed", gf.seed, "Shuffle seed");
  generate->add_option("--out", gf.out, "Output directory");
  generate->add_flag("--yes", gf.yes, "Register new services without asking");
  generate->add_flag("--create-services", gf.create_services, "Design services the registry lacks");
  generate->add_flag("--no-feasibility", gf.no_feasibility, "Skip the feasibility check");
  generate->add_option("--services-dir", gf.services_dir, "Where generated services live");
  add_provider_flags(generate, pf, true, false);

  std::vector<std::string> quality_files;
  std::string quality_services;
  auto* quality = app.add_subcommand("quality", "Validity, coherence and clarity of task documents");
  quality->add_option("files", quality_files, "Task documents")->required();
  quality->add_option("--services-dir", quality_services, "Extra service specs");
  add_provider_flags(quality, pf, false, true);

  std::string manifest;
  auto* mcp = app.add_subcommand("mcp-serve", "MCP server over stdio for a harness manifest");
  mcp->add_option("--manifest", manifest, "mcp_manifest.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  try {
    if (*validate) return cmd_validate(validate_files, services_dir, validate_json);
    if (*serve) return cmd_serve(sf);
    if (*run) return cmd_run(rf, pf);
    if (*grade_cmd) return cmd_grade(grade_dirs, pf, grade_mode);
    if (*bench) return cmd_bench(bf, pf);
    if (*report) return cmd_report(report_dir, report_threshold, report_json);
    if (*generate) return cmd_generate(gf, pf);
    if (*quality) return cmd_quality(quality_files, pf, quality_services);
    if (*mcp) return run_mcp_server(std::cin, std::cout, Json::parse(read_file(manifest)));
  } catch (const StartError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const GenerationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kTaskFailures;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kOk;
}
