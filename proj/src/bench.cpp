// SPDX-License-Identifier: Apache-2.0
#include "clawenv/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace clawenv {

Json to_json(const RunRecord& r) {
  Json j{{"task_id", r.task_id},
         {"tier", r.tier},
         {"model", r.model},
         {"seed", r.seed},
         {"run", r.run},
         {"artifacts", r.artifacts},
         {"timings", {{"execute_s", r.execute_s}, {"grade_s", r.grade_s}}},
         {"attempts", {{"rounds_used", r.rounds_used}, {"tool_calls", r.tool_calls}, {"stop_reason", r.stop_reason}}}};
  j["grade"] = r.grade ? to_json(*r.grade) : Json();
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

RunRecord run_record_from_json(const Json& j) {
  RunRecord r;
  r.task_id = j.value("task_id", std::string{});
  r.tier = j.value("tier", std::string{});
  r.model = j.value("model", std::string{});
  r.seed = j.value("seed", std::uint64_t{0});
  r.run = j.value("run", 0);
  r.artifacts = j.value("artifacts", std::string{});
  if (j.contains("grade") && j["grade"].is_object()) r.grade = grade_report_from_json(j["grade"]);
  const Json t = j.value("timings", Json::object());
  r.execute_s = t.value("execute_s", 0.0);
  r.grade_s = t.value("grade_s", 0.0);
  const Json a = j.value("attempts", Json::object());
  r.rounds_used = a.value("rounds_used", 0);
  r.tool_calls = a.value("tool_calls", 0);
  r.stop_reason = a.value("stop_reason", std::string{});
  r.error = j.value("error", std::string{});
  return r;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

}  // namespace

std::uint64_t run_seed(std::uint64_t base, const std::string& task_id, int run) {
  return splitmix64(splitmix64(base ^ fnv1a(task_id)) + static_cast<std::uint64_t>(run));
}

std::vector<AggregateReport> aggregate_records(const std::vector<RunRecord>& records, double threshold) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunRecord*>> by_task;
  for (const auto& r : records) {
    if (!by_task.count(r.task_id)) order.push_back(r.task_id);
    by_task[r.task_id].push_back(&r);
  }
  std::vector<AggregateReport> out;
  for (const auto& id : order) {
    std::vector<GradeReport> reports;
    for (const auto* r : by_task[id]) {
      if (r->grade) {
        reports.push_back(*r->grade);
      } else {
        GradeReport failed;
        failed.task_id = id;
        failed.robustness = 0.0;
        reports.push_back(failed);
      }
    }
    if (reports.size() == 3) {
      out.push_back(aggregate_pass3(reports, threshold));
      continue;
    }
    AggregateReport a;
    a.task_id = id;
    a.threshold = threshold;
    double n = static_cast<double>(reports.size());
    a.min = reports.empty() ? 0.0 : 1.0;
    for (const auto& g : reports) {
      a.finals.push_back(g.final);
      a.mean += g.final / n;
      a.min = std::min(a.min, g.final);
      a.mean_safety += g.safety / n;
      a.mean_completion += g.completion / n;
      a.mean_robustness += g.robustness / n;
    }
    a.pass3 = !reports.empty() && a.min >= threshold;
    out.push_back(a);
  }
  return out;
}

Json summarize(const std::vector<RunRecord>& records, const std::vector<AggregateReport>& aggregates) {
  Json per_task = Json::array();
  double mean = 0, safety = 0, comp = 0, rob = 0;
  int passed = 0;
  for (const auto& a : aggregates) {
    per_task.push_back(to_json(a));
    mean += a.mean;
    safety += a.mean_safety;
    comp += a.mean_completion;
    rob += a.mean_robustness;
    passed += a.pass3 ? 1 : 0;
  }
  const double n = aggregates.empty() ? 1.0 : static_cast<double>(aggregates.size());
  int failed = 0;
  for (const auto& r : records) failed += r.error.empty() ? 0 : 1;
  return Json{{"tasks", aggregates.size()},
              {"runs", records.size()},
              {"failed_runs", failed},
              {"mean_score", mean / n},
              {"pass3_rate", passed / n},
              {"mean_safety", safety / n},
              {"mean_completion", comp / n},
              {"mean_robustness", rob / n},
              {"per_task", per_task}};
}

std::string render_summary(const Json& summary) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-36s %7s %7s %7s %7s %7s %6s\n", "task", "mean", "min", "safety", "compl",
                "robust", "pass3");
  out << line;
  for (const auto& t : summary.value("per_task", Json::array())) {
    std::snprintf(line, sizeof(line), "%-36s %7.3f %7.3f %7.3f %7.3f %7.3f %6s\n",
                  t.value("task_id", std::string{}).substr(0, 36).c_str(), t.value("mean", 0.0), t.value("min", 0.0),
                  t.value("mean_safety", 0.0), t.value("mean_completion", 0.0), t.value("mean_robustness", 0.0),
                  t.value("pass3", false) ? "yes" : "no");
    out << line;
  }
  std::snprintf(line, sizeof(line), "%-36s %7.3f %7s %7.3f %7.3f %7.3f %5.1f%%\n", "OVERALL",
                summary.value("mean_score", 0.0), "", summary.value("mean_safety", 0.0),
                summary.value("mean_completion", 0.0), summary.value("mean_robustness", 0.0),
                100.0 * summary.value("pass3_rate", 0.0));
  out << line;
  out << summary.value("tasks", 0) << " tasks, " << summary.value("runs", 0) << " runs, "
      << summary.value("failed_runs", 0) << " failed\n";
  return out.str();
}

BenchReport run_benchmark(const std::vector<TaskConfig>& tasks, const ServiceRegistry& registry,
                          const ClientFactory& agent, const ClientFactory& judge, const BenchOptions& opts) {
  struct Job {
    std::size_t task;
    int run;
  };
  std::vector<Job> jobs;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    for (int r = 0; r < opts.runs; ++r) jobs.push_back({t, r});
  }
  BenchReport report;
  report.records.resize(jobs.size());
  std::vector<std::optional<RunResult>> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex io;

  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const TaskConfig& cfg = tasks[jobs[i].task];
      RunRecord rec;
      rec.task_id = cfg.task_id;
      rec.tier = std::string(to_string(opts.run.tier));
      rec.model = opts.model_label;
      rec.run = jobs[i].run;
      rec.seed = run_seed(opts.seed, cfg.task_id, jobs[i].run);
      try {
        RunOptions ro = opts.run;
        ro.seed = rec.seed;
        auto agent_client = agent();
        auto t0 = Clock::now();
        RunResult result = execute_task(cfg, registry, *agent_client, ro);
        rec.execute_s = seconds_since(t0);
        rec.rounds_used = result.trajectory.rounds_used;
        rec.tool_calls = result.trajectory.tool_call_count();
        rec.stop_reason = result.trajectory.stop_reason;
        auto judge_client = judge ? judge() : nullptr;
        t0 = Clock::now();
        GradeReport g = grade(cfg, result, judge_client.get(), opts.grade);
        rec.grade_s = seconds_since(t0);
        if (!opts.out_dir.empty()) {
          auto dir = opts.out_dir / "runs" / cfg.task_id / ("run-" + std::to_string(jobs[i].run));
          Json meta{{"task_id", cfg.task_id}, {"tier", rec.tier}, {"model", rec.model}, {"seed", rec.seed},
                    {"run", rec.run}};
          std::lock_guard<std::mutex> lock(io);
          write_run_artifacts(dir, cfg, result, &g, meta);
          rec.artifacts = dir.string();
        }
        rec.grade = std::move(g);
        results[i] = std::move(result);
      } catch (const std::exception& e) {
        rec.error = e.what();
      }
      report.records[i] = std::move(rec);
    }
  };
  const int workers = std::max(1, std::min<int>(opts.workers, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  report.aggregates = aggregate_records(report.records, opts.threshold);
  std::vector<std::pair<RunResult, GradeReport>> graded;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (results[i] && report.records[i].grade) graded.emplace_back(*results[i], *report.records[i].grade);
  }
  report.triage = triage_false_negatives(graded);
  report.summary = summarize(report.records, report.aggregates);
  report.summary["triage"] = to_json(report.triage);
  return report;
}

}  // namespace clawenv
