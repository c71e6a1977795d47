// SPDX-License-Identifier: Apache-2.0
#include "clawenv/agent_loop.hpp"

#include "clawenv/assets.hpp"

#include <algorithm>

namespace clawenv {

std::string truncate_tool_result(const std::string& content, std::size_t limit) {
  if (content.size() <= limit) return content;
  std::size_t cut = limit;
  while (cut > 0 && (static_cast<unsigned char>(content[cut]) & 0xC0) == 0x80) --cut;
  return content.substr(0, cut) + "\n...[truncated " + std::to_string(content.size() - cut) + " bytes]";
}

namespace {

double seconds_left(Clock::time_point deadline) {
  return std::chrono::duration<double>(deadline - Clock::now()).count();
}

std::string xml_results(const std::vector<ToolResult>& results) {
  std::string out;
  for (const auto& r : results) {
    out += "<tool_result name=\"" + r.name + "\" status=\"" + std::to_string(r.status) + "\">\n" + r.content +
           "\n</tool_result>\n";
  }
  return out;
}

}  // namespace

Trajectory run_agent_loop(const std::string& prompt, ToolExecutor& executor, const LlmClient& llm,
                          const AgentOptions& opts) {
  Trajectory t;
  const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                           std::chrono::duration<double>(opts.task_timeout_s));
  const auto tools = executor.definitions();

  std::vector<ChatMessage> messages;
  messages.push_back({"system", opts.system_prompt.empty() ? std::string(asset("prompts/agent_system.txt")) : opts.system_prompt});
  messages.push_back({"user", prompt});
  t.turns.push_back(Turn{"user", prompt, {}, {}});

  std::string last_text;
  auto time_out = [&] {
    t.timed_out = true;
    t.stop_reason = "timeout";
    t.final_output = last_text;
  };

  for (int round = 1; round <= opts.max_rounds; ++round) {
    const double left = seconds_left(deadline);
    if (left <= 0) {
      time_out();
      return t;
    }
    ChatRequest req;
    req.model = opts.model;
    req.messages = messages;
    req.tools = tools;
    req.max_tokens = opts.max_tokens;
    req.timeout_s = std::min(opts.turn_timeout_s, left);
    req.deadline = deadline;

    ChatResponse resp;
    t.rounds_used = round;
    try {
      resp = llm.complete_chat(req);
    } catch (const ProviderError& e) {
      if (seconds_left(deadline) <= 0) {
        time_out();
      } else {
        t.stop_reason = "provider_error";
        t.provider_error = e.what();
        t.final_output = last_text;
      }
      return t;
    }

    std::vector<ToolCall> calls = resp.tool_calls;
    std::string text = resp.text;
    bool xml = false;
    if (calls.empty()) {
      auto [parsed, rest] = parse_xml_tool_calls(resp.text);
      if (!parsed.empty()) {
        calls = std::move(parsed);
        text = rest;
        xml = true;
        for (std::size_t i = 0; i < calls.size(); ++i) {
          calls[i].id = "xml_" + std::to_string(round) + "_" + std::to_string(i);
        }
      }
    }
    if (!text.empty()) last_text = text;

    Turn turn{"assistant", text, calls, {}};
    if (calls.empty()) {
      t.turns.push_back(std::move(turn));
      t.final_output = text;
      t.stop_reason = "final";
      return t;
    }

    for (const auto& call : calls) {
      ToolResult r = executor.execute(call);
      r.call_id = call.id;
      r.content = truncate_tool_result(r.content, opts.max_tool_result_bytes);
      turn.tool_results.push_back(std::move(r));
    }

    if (xml) {
      messages.push_back({"assistant", resp.text});
      messages.push_back({"user", xml_results(turn.tool_results)});
    } else {
      messages.push_back({"assistant", resp.text, calls});
      for (const auto& r : turn.tool_results) messages.push_back({"tool", r.content, {}, r.call_id, r.name});
    }
    t.turns.push_back(std::move(turn));

    if (seconds_left(deadline) <= 0) {
      time_out();
      return t;
    }
  }
  t.stop_reason = "max_rounds";
  t.final_output = last_text;
  return t;
}

}  // namespace clawenv
