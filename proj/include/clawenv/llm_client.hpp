// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "clawenv/errors.hpp"
#include "clawenv/json.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace clawenv {

struct ToolCall {
  std::string id;
  std::string name;
  Json arguments = Json::object();

  bool operator==(const ToolCall&) const = default;
};

struct ChatMessage {
  std::string role;  // system, user, assistant, tool
  std::string content;
  std::vector<ToolCall> tool_calls;  // assistant only
  std::string tool_call_id;          // tool only
  std::string name;                  // tool only

  bool operator==(const ChatMessage&) const = default;
};

Json to_json(const ToolCall& c);
Json to_json(const ChatMessage& m);
ChatMessage chat_message_from_json(const Json& j);

struct ToolDefinition {
  std::string name;
  std::string description;
  Json parameters = Json{{"type", "object"}, {"properties", Json::object()}};
};

using Clock = std::chrono::steady_clock;

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  std::vector<ToolDefinition> tools;
  double temperature = 0.0;
  int max_tokens = 4096;
  double timeout_s = 120.0;
  std::optional<Clock::time_point> deadline;  // hard stop across retries

  static ChatRequest simple(std::string system, std::string user, double timeout_s = 120.0);
};

struct ChatResponse {
  std::string text;
  std::vector<ToolCall> tool_calls;
  int attempts_used = 1;
  std::vector<double> waits;  // seconds slept before each retry
};

enum class FailureKind { status, timeout, connection, invalid_response };

class ProviderError : public Error {
public:
  ProviderError(FailureKind kind, int status, const std::string& what)
      : Error(what), kind_(kind), status_(status) {}

  FailureKind kind() const noexcept { return kind_; }
  int status() const noexcept { return status_; }
  int attempts() const noexcept { return attempts_; }
  void set_attempts(int n) { attempts_ = n; }

private:
  FailureKind kind_;
  int status_;
  int attempts_ = 1;
};

/// One attempt against a model backend. Implementations throw ProviderError.
class LlmProvider {
public:
  virtual ~LlmProvider() = default;
  virtual ChatResponse chat(const ChatRequest& req) = 0;
};

struct RetryPolicy {
  int max_retries = 5;
  std::set<int> retryable_statuses{429, 500, 502, 503, 529};
  double wait_min_s = 2.0;
  double wait_max_s = 4.0;
  double time_scale = 1.0;

  bool retryable(const ProviderError& e) const;
  /// Wait before retry number `attempt` (0-based) given a uniform draw u in [0,1).
  double wait(int attempt, double u) const {
    return (wait_min_s + u * (wait_max_s - wait_min_s)) * (attempt + 1) * time_scale;
  }
};

using Sleeper = std::function<void(double seconds)>;
void real_sleep(double seconds);

/// Provider plus retry policy. Shareable across threads.
class LlmClient {
public:
  explicit LlmClient(std::shared_ptr<LlmProvider> provider, RetryPolicy policy = {}, std::uint64_t jitter_seed = 0,
                     Sleeper sleeper = real_sleep);

  /// Retries retryable failures up to max_retries times. Throws ProviderError (with attempts())
  /// when retries are exhausted, the failure is not retryable, or the deadline passed.
  ChatResponse complete_chat(const ChatRequest& req) const;

  const RetryPolicy& policy() const { return policy_; }
  LlmProvider& provider() const { return *provider_; }
  std::string model;  // used when a request leaves model empty

private:
  std::shared_ptr<LlmProvider> provider_;
  RetryPolicy policy_;
  Sleeper sleeper_;
  mutable std::mutex mu_;
  mutable std::mt19937_64 jitter_;
};

// --- HTTP chat-completions provider ---

struct ProviderConfig {
  std::string base_url;  // e.g. https://openrouter.ai/api/v1
  std::string api_key;
  std::string model;

  /// Model presets file plus CLAWENV_BASE_URL / CLAWENV_API_KEY / CLAWENV_MODEL overrides.
  /// `preset` selects an entry of the presets table (or is taken as a literal model id).
  static ProviderConfig from_env(const std::string& preset = {});
};

class HttpProvider : public LlmProvider {
public:
  explicit HttpProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {}
  ChatResponse chat(const ChatRequest& req) override;

  static Json request_body(const ChatRequest& req, const std::string& model);
  static ChatResponse parse_response(const Json& body);

private:
  ProviderConfig cfg_;
};

// --- scripted stub ---

/// Deterministic provider replaying canned responses.
///
/// Script shape:
///   {"rules": [{"match": {"contains": "...", "any_contains": "...", "system_contains": "...",
///                         "turn": 2},
///               "responses": [{"text": "...", "tool_calls": [{"name": "...", "arguments": {}}]},
///                             {"error": {"status": 503}}, {"error": {"kind": "timeout"}},
///                             {"sleep_s": 1.5, "text": "..."}],
///               "repeat": "last" | "cycle" | "none"}],  // default last
///    "fallback": {"text": "..."}}
/// A bare list is shorthand for one unconditional rule. `contains` looks at the last user
/// message, `turn` counts assistant messages already in the request. Rules are tried in order;
/// an exhausted rule with repeat "none" is skipped.
class ScriptedStub : public LlmProvider {
public:
  explicit ScriptedStub(Json script);
  static std::shared_ptr<ScriptedStub> from_file(const std::string& path);

  ChatResponse chat(const ChatRequest& req) override;
  void reset();

  struct Exchange {
    ChatRequest request;
    Json response;  // the script entry served
  };
  std::vector<Exchange> transcript() const;
  int calls() const;

private:
  struct Rule {
    Json match;
    std::vector<Json> responses;
    std::string repeat;
    std::size_t cursor = 0;
  };

  bool matches(const Rule& r, const ChatRequest& req) const;

  Json script_;
  std::vector<Rule> rules_;
  std::optional<Json> fallback_;
  mutable std::mutex mu_;
  std::vector<Exchange> transcript_;
};

/// Pulls `<tool_call>{...}</tool_call>` blocks out of model text. Returns the calls and the
/// text with the blocks removed.
std::pair<std::vector<ToolCall>, std::string> parse_xml_tool_calls(const std::string& text);

}  // namespace clawenv
