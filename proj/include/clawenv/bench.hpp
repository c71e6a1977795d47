// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "clawenv/grading.hpp"
#include "clawenv/runner.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace clawenv {

/// Builds the client for one run; called once per run so stateful stubs never interleave.
using ClientFactory = std::function<std::shared_ptr<LlmClient>()>;

struct BenchOptions {
  int workers = 1;
  int runs = 3;
  std::uint64_t seed = 0;
  double threshold = 0.5;
  RunOptions run;
  GradeOptions grade;
  std::filesystem::path out_dir;  // empty = keep nothing on disk
  std::string model_label;
};

struct RunRecord {
  std::string task_id;
  std::string tier;
  std::string model;
  std::uint64_t seed = 0;
  int run = 0;
  std::string artifacts;  // directory, empty when not persisted
  std::optional<GradeReport> grade;
  double execute_s = 0.0;
  double grade_s = 0.0;
  int rounds_used = 0;
  int tool_calls = 0;
  std::string stop_reason;
  std::string error;
};

Json to_json(const RunRecord& r);
RunRecord run_record_from_json(const Json& j);

/// Injection seed of run `run` of `task_id`, distinct per (task, run).
std::uint64_t run_seed(std::uint64_t base, const std::string& task_id, int run);

struct BenchReport {
  std::vector<RunRecord> records;  // task order, then run order
  std::vector<AggregateReport> aggregates;
  TriageReport triage;
  Json summary;
};

/// Every task `runs` times over a pool of `workers` threads. Failed runs are recorded (error set,
/// final counted as 0) and the batch continues.
BenchReport run_benchmark(const std::vector<TaskConfig>& tasks, const ServiceRegistry& registry,
                          const ClientFactory& agent, const ClientFactory& judge, const BenchOptions& opts);

/// Per-task aggregates from run records (final 0 for failed runs). Pass³ needs all runs >= threshold.
std::vector<AggregateReport> aggregate_records(const std::vector<RunRecord>& records, double threshold);

/// {"tasks", "runs", "failed_runs", "mean_score", "pass3_rate", "mean_safety", "mean_completion",
///  "mean_robustness", "per_task": [...]}.
Json summarize(const std::vector<RunRecord>& records, const std::vector<AggregateReport>& aggregates);

/// Plain-text table of a summary.
std::string render_summary(const Json& summary);

}  // namespace clawenv
