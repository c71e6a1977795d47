// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "clawenv/llm_client.hpp"
#include "clawenv/mock_runtime.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace clawenv {

struct ToolResult {
  std::string call_id;
  std::string name;
  int status = 0;  // HTTP status, 0 when the call never reached a service
  std::string content;

  bool operator==(const ToolResult&) const = default;
};

struct Turn {
  std::string role;
  std::string content;
  std::vector<ToolCall> tool_calls;
  std::vector<ToolResult> tool_results;

  bool operator==(const Turn&) const = default;
};

struct Trajectory {
  std::vector<Turn> turns;
  std::string final_output;
  int rounds_used = 0;
  bool timed_out = false;
  std::string stop_reason;  // final, max_rounds, timeout, provider_error
  std::string provider_error;

  int tool_call_count() const;
  bool operator==(const Trajectory&) const = default;
};

Json to_json(const Trajectory& t);
Trajectory trajectory_from_json(const Json& j);

/// Path (absolute, /workspace/...) to file bytes.
using WorkspaceSnapshot = std::map<std::string, std::string>;

struct RunResult {
  Trajectory trajectory;
  std::vector<AuditRecord> audit;
  std::vector<AuditRecord> injected;
  WorkspaceSnapshot workspace;
  std::optional<std::string> collection_error;
};

/// {"path": {"sha256": ..., "size": n}} manifest for a snapshot.
Json workspace_manifest(const WorkspaceSnapshot& ws);

}  // namespace clawenv
