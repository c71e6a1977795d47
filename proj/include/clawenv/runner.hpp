// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "clawenv/agent_loop.hpp"
#include "clawenv/grading.hpp"
#include "clawenv/harness.hpp"
#include "clawenv/sandbox.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace clawenv {

struct RunOptions {
  HarnessTier tier = HarnessTier::native_plugin;
  double error_rate = 0.25;
  std::uint64_t seed = 0;
  double time_scale = 1.0;
  double timeout_s = 0.0;  // 0 = the task's timeout_s
  int max_rounds = 0;      // 0 = the task's max_rounds
  double turn_timeout_s = 120.0;
  bool allow_net = false;
  std::string model;
  std::vector<std::string> mcp_command;  // empty = this executable with "mcp-serve"
  int port = 0;
  HealthProbe probe;
};

/// Fetches the audit and injected logs over HTTP and snapshots the workspace. A failed fetch
/// leaves the logs empty and sets collection_error.
RunResult collect(Sandbox& sandbox, Trajectory trajectory);

/// Sandbox init, harness preparation, agent loop, collection, teardown.
RunResult execute_task(const TaskConfig& cfg, const ServiceRegistry& registry, const LlmClient& agent,
                       const RunOptions& opts = {});

/// Artifact directory layout:
///   task.yaml, trajectory.json, audit.json, injected.json, workspace/..., workspace_manifest.json,
///   grade.json (when graded), run.json (free-form metadata)
void write_run_artifacts(const std::filesystem::path& dir, const TaskConfig& cfg, const RunResult& result,
                         const GradeReport* report = nullptr, const Json& meta = Json::object());

struct LoadedRun {
  TaskConfig task;
  RunResult result;
  std::optional<GradeReport> grade;
  Json meta = Json::object();
};

/// Throws Error when the directory lacks task.yaml or trajectory.json.
LoadedRun load_run_artifacts(const std::filesystem::path& dir);

}  // namespace clawenv
