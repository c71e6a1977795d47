// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "clawenv/harness.hpp"
#include "clawenv/llm_client.hpp"
#include "clawenv/run_result.hpp"

#include <cstddef>
#include <string>

namespace clawenv {

inline constexpr std::size_t kMaxToolResultBytes = 16 * 1024;

struct AgentOptions {
  int max_rounds = 20;
  double task_timeout_s = 300.0;
  double turn_timeout_s = 120.0;
  std::string system_prompt;  // empty = built-in agent prompt
  std::string model;
  int max_tokens = 4096;
  std::size_t max_tool_result_bytes = kMaxToolResultBytes;
};

/// Cuts `content` to `limit` bytes on a UTF-8 boundary and appends a marker.
std::string truncate_tool_result(const std::string& content, std::size_t limit = kMaxToolResultBytes);

/// The built-in ReAct loop. One provider call per round; tool calls come natively or as
/// <tool_call> markup in the text. Stops on a reply without tool calls, at max_rounds, at
/// the task deadline, or when the provider gives up.
Trajectory run_agent_loop(const std::string& prompt, ToolExecutor& executor, const LlmClient& llm,
                          const AgentOptions& opts = {});

}  // namespace clawenv
