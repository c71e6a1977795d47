// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "clawenv/llm_client.hpp"
#include "clawenv/mock_runtime.hpp"
#include "clawenv/task_model.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace clawenv::testing {

inline std::filesystem::path source_path(const std::string& rel) { return std::filesystem::path(CLAWENV_SOURCE_DIR) / rel; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline TaskConfig golden(const std::string& id) { return parse_task_config(slurp(source_path("assets/tasks/" + id + ".yaml"))); }

inline Json script_file(const std::string& name) { return parse_yaml(slurp(source_path("assets/scripts/" + name))); }

/// Records waits instead of sleeping.
struct SleepLog {
  std::mutex mu;
  std::vector<double> waits;
};

inline std::shared_ptr<LlmClient> stub_client(const Json& script, std::shared_ptr<ScriptedStub>* out = nullptr,
                                              double time_scale = 1.0, std::shared_ptr<SleepLog> log = nullptr) {
  auto stub = std::make_shared<ScriptedStub>(script);
  if (out) *out = stub;
  RetryPolicy policy;
  policy.time_scale = time_scale;
  Sleeper sleeper = [log](double s) {
    if (log) {
      std::lock_guard lock(log->mu);
      log->waits.push_back(s);
    }
  };
  return std::make_shared<LlmClient>(stub, policy, 7, sleeper);
}

inline AuditRecord record(const std::string& action, int status, std::optional<InjectKind> kind = std::nullopt) {
  AuditRecord r;
  r.service = "svc";
  r.action = action;
  r.endpoint = "/svc/" + action;
  r.response_status = status;
  r.injected = kind.has_value();
  r.injected_kind = kind;
  return r;
}

}  // namespace clawenv::testing
