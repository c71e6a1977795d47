// SPDX-License-Identifier: Apache-2.0
#include "clawenv/runner.hpp"

#include "clawenv/errors.hpp"

#include <fstream>
#include <unistd.h>

namespace clawenv {

namespace fs = std::filesystem;

RunResult collect(Sandbox& sandbox, Trajectory trajectory) {
  RunResult r;
  r.trajectory = std::move(trajectory);
  const std::string base = sandbox.services_endpoint();
  if (!base.empty()) {
    try {
      HttpClient client;
      auto audit = client.get(base + "/audit", 10.0);
      auto injected = client.get(base + "/audit?injected=true", 10.0);
      if (audit.status != 200 || injected.status != 200) {
        throw Error("audit fetch failed (" + std::to_string(audit.status) + ", " + std::to_string(injected.status) +
                    ")" + (audit.error.empty() ? "" : ": " + audit.error));
      }
      r.audit = audit_log_from_json(audit.json());
      r.injected = audit_log_from_json(injected.json());
    } catch (const std::exception& e) {
      r.audit.clear();
      r.injected.clear();
      r.collection_error = e.what();
    }
  }
  r.workspace = sandbox.snapshot_workspace();
  return r;
}

namespace {

std::vector<std::string> default_mcp_command() {
  char buf[4096];
  const ssize_t n = ::readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  if (n <= 0) throw SandboxError("cannot locate the executable for the MCP server");
  return {std::string(buf, static_cast<std::size_t>(n)), "mcp-serve"};
}

}  // namespace

RunResult execute_task(const TaskConfig& cfg, const ServiceRegistry& registry, const LlmClient& agent,
                       const RunOptions& opts) {
  ErrorInjectionPolicy policy;
  policy.rate = opts.error_rate;
  policy.seed = opts.seed;

  SandboxConfig sc;
  sc.time_scale = opts.time_scale;
  sc.timeout_s = opts.timeout_s > 0 ? opts.timeout_s : cfg.timeout_s;
  sc.network_egress = opts.allow_net;
  sc.port = opts.port;
  Sandbox sandbox(cfg, registry, policy, sc, opts.probe);

  auto mcp = opts.mcp_command;
  if (opts.tier == HarnessTier::mcp_stdio && mcp.empty() && !cfg.tools.empty()) mcp = default_mcp_command();
  auto artifacts = prepare_harness(opts.tier, cfg, registry, sandbox.services_endpoint(), sandbox.harness_dir(),
                                   sandbox.workspace(), mcp);
  Trajectory trajectory;
  {
    auto executor = make_executor(artifacts, sandbox.egress());
    AgentOptions ao;
    ao.max_rounds = opts.max_rounds > 0 ? opts.max_rounds : cfg.max_rounds;
    ao.task_timeout_s = sc.timeout_s * opts.time_scale;
    ao.turn_timeout_s = opts.turn_timeout_s * opts.time_scale;
    ao.model = opts.model;
    trajectory = run_agent_loop(artifacts.prompt, *executor, agent, ao);
  }
  RunResult result = collect(sandbox, std::move(trajectory));
  sandbox.teardown();
  return result;
}

namespace {

void write_text(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << s;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

void write_run_artifacts(const fs::path& dir, const TaskConfig& cfg, const RunResult& result, const GradeReport* report,
                         const Json& meta) {
  fs::create_directories(dir);
  write_text(dir / "task.yaml", serialize_task_yaml(cfg));
  write_text(dir / "trajectory.json", to_json(result.trajectory).dump(2) + "\n");
  write_text(dir / "audit.json", Json{{"records", to_json(result.audit)}}.dump(2) + "\n");
  write_text(dir / "injected.json", Json{{"records", to_json(result.injected)}}.dump(2) + "\n");
  for (const auto& [path, bytes] : result.workspace) {
    write_text(dir / "workspace" / path.substr(kWorkspacePrefix.size()), bytes);
  }
  write_text(dir / "workspace_manifest.json", workspace_manifest(result.workspace).dump(2) + "\n");
  Json run = meta;
  if (result.collection_error) run["collection_error"] = *result.collection_error;
  write_text(dir / "run.json", run.dump(2) + "\n");
  if (report) write_text(dir / "grade.json", to_json(*report).dump(2) + "\n");
}

LoadedRun load_run_artifacts(const fs::path& dir) {
  if (!fs::exists(dir / "task.yaml")) throw Error(dir.string() + ": no task.yaml");
  if (!fs::exists(dir / "trajectory.json")) throw Error(dir.string() + ": no trajectory.json");
  LoadedRun run;
  run.task = parse_task_config(read_text(dir / "task.yaml"));
  run.result.trajectory = trajectory_from_json(Json::parse(read_text(dir / "trajectory.json")));
  if (fs::exists(dir / "audit.json")) run.result.audit = audit_log_from_json(Json::parse(read_text(dir / "audit.json")));
  if (fs::exists(dir / "injected.json")) {
    run.result.injected = audit_log_from_json(Json::parse(read_text(dir / "injected.json")));
  }
  const fs::path ws = dir / "workspace";
  if (fs::exists(ws)) {
    for (const auto& e : fs::recursive_directory_iterator(ws)) {
      if (e.is_regular_file()) {
        run.result.workspace[std::string(kWorkspacePrefix) + fs::relative(e.path(), ws).generic_string()] =
            read_text(e.path());
      }
    }
  }
  if (fs::exists(dir / "run.json")) {
    run.meta = Json::parse(read_text(dir / "run.json"));
    if (run.meta.contains("collection_error")) run.result.collection_error = run.meta["collection_error"].get<std::string>();
  }
  if (fs::exists(dir / "grade.json")) run.grade = grade_report_from_json(Json::parse(read_text(dir / "grade.json")));
  return run;
}

}  // namespace clawenv
