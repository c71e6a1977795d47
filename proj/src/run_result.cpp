// SPDX-License-Identifier: Apache-2.0
#include "clawenv/run_result.hpp"

#include "clawenv/text.hpp"

namespace clawenv {

int Trajectory::tool_call_count() const {
  int n = 0;
  for (const auto& t : turns) n += static_cast<int>(t.tool_calls.size());
  return n;
}

Json to_json(const Trajectory& t) {
  Json turns = Json::array();
  for (const auto& turn : t.turns) {
    Json j{{"role", turn.role}, {"content", turn.content}};
    if (!turn.tool_calls.empty()) {
      j["tool_calls"] = Json::array();
      for (const auto& c : turn.tool_calls) j["tool_calls"].push_back(to_json(c));
    }
    if (!turn.tool_results.empty()) {
      j["tool_results"] = Json::array();
      for (const auto& r : turn.tool_results) {
        j["tool_results"].push_back(
            Json{{"call_id", r.call_id}, {"name", r.name}, {"status", r.status}, {"content", r.content}});
      }
    }
    turns.push_back(std::move(j));
  }
  Json out{{"turns", std::move(turns)},
           {"final_output", t.final_output},
           {"rounds_used", t.rounds_used},
           {"timed_out", t.timed_out},
           {"stop_reason", t.stop_reason}};
  if (!t.provider_error.empty()) out["provider_error"] = t.provider_error;
  return out;
}

Trajectory trajectory_from_json(const Json& j) {
  Trajectory t;
  for (const auto& tj : j.value("turns", Json::array())) {
    Turn turn;
    turn.role = tj.value("role", std::string{});
    turn.content = tj.value("content", std::string{});
    for (const auto& c : tj.value("tool_calls", Json::array())) {
      turn.tool_calls.push_back(
          ToolCall{c.value("id", std::string{}), c.value("name", std::string{}), c.value("arguments", Json::object())});
    }
    for (const auto& r : tj.value("tool_results", Json::array())) {
      turn.tool_results.push_back(ToolResult{r.value("call_id", std::string{}), r.value("name", std::string{}),
                                             r.value("status", 0), r.value("content", std::string{})});
    }
    t.turns.push_back(std::move(turn));
  }
  t.final_output = j.value("final_output", std::string{});
  t.rounds_used = j.value("rounds_used", 0);
  t.timed_out = j.value("timed_out", false);
  t.stop_reason = j.value("stop_reason", std::string{});
  t.provider_error = j.value("provider_error", std::string{});
  return t;
}

Json workspace_manifest(const WorkspaceSnapshot& ws) {
  Json out = Json::object();
  for (const auto& [path, bytes] : ws) out[path] = Json{{"sha256", sha256_hex(bytes)}, {"size", bytes.size()}};
  return out;
}

}  // namespace clawenv
