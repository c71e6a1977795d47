// SPDX-License-Identifier: Apache-2.0
#include "clawenv/llm_client.hpp"

#include "clawenv/assets.hpp"
#include "clawenv/http_client.hpp"
#include "clawenv/text.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <thread>

namespace clawenv {

Json to_json(const ToolCall& c) { return Json{{"id", c.id}, {"name", c.name}, {"arguments", c.arguments}}; }

Json to_json(const ChatMessage& m) {
  Json j{{"role", m.role}, {"content", m.content}};
  if (!m.tool_calls.empty()) {
    j["tool_calls"] = Json::array();
    for (const auto& c : m.tool_calls) j["tool_calls"].push_back(to_json(c));
  }
  if (!m.tool_call_id.empty()) j["tool_call_id"] = m.tool_call_id;
  if (!m.name.empty()) j["name"] = m.name;
  return j;
}

ChatMessage chat_message_from_json(const Json& j) {
  ChatMessage m;
  m.role = j.value("role", std::string{});
  m.content = j.value("content", std::string{});
  m.tool_call_id = j.value("tool_call_id", std::string{});
  m.name = j.value("name", std::string{});
  for (const auto& c : j.value("tool_calls", Json::array())) {
    m.tool_calls.push_back(ToolCall{c.value("id", std::string{}), c.value("name", std::string{}),
                                    c.value("arguments", Json::object())});
  }
  return m;
}

ChatRequest ChatRequest::simple(std::string system, std::string user, double timeout_s) {
  ChatRequest r;
  if (!system.empty()) r.messages.push_back(ChatMessage{"system", std::move(system)});
  r.messages.push_back(ChatMessage{"user", std::move(user)});
  r.timeout_s = timeout_s;
  return r;
}

bool RetryPolicy::retryable(const ProviderError& e) const {
  switch (e.kind()) {
    case FailureKind::timeout:
    case FailureKind::connection: return true;
    case FailureKind::status: return retryable_statuses.count(e.status()) > 0;
    case FailureKind::invalid_response: return false;
  }
  return false;
}

void real_sleep(double seconds) {
  if (seconds > 0) std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

LlmClient::LlmClient(std::shared_ptr<LlmProvider> provider, RetryPolicy policy, std::uint64_t jitter_seed,
                     Sleeper sleeper)
    : provider_(std::move(provider)), policy_(std::move(policy)), sleeper_(std::move(sleeper)), jitter_(jitter_seed) {}

namespace {

double seconds_until(Clock::time_point t) { return std::chrono::duration<double>(t - Clock::now()).count(); }

}  // namespace

ChatResponse LlmClient::complete_chat(const ChatRequest& req) const {
  std::vector<double> waits;
  for (int attempt = 0;; ++attempt) {
    ChatRequest r = req;
    if (r.model.empty()) r.model = model;
    if (r.deadline) {
      const double left = seconds_until(*r.deadline);
      if (left <= 0) {
        ProviderError e(FailureKind::timeout, 0, "deadline passed before the call");
        e.set_attempts(attempt);
        throw e;
      }
      r.timeout_s = std::min(r.timeout_s, left);
    }
    try {
      ChatResponse res = provider_->chat(r);
      res.attempts_used = attempt + 1;
      res.waits = waits;
      return res;
    } catch (ProviderError& e) {
      e.set_attempts(attempt + 1);
      if (!policy_.retryable(e) || attempt >= policy_.max_retries) throw;
      double u;
      {
        std::lock_guard lock(mu_);
        u = static_cast<double>(jitter_() >> 11) * 0x1.0p-53;
      }
      const double w = policy_.wait(attempt, u);
      if (req.deadline && seconds_until(*req.deadline) <= w) throw;
      waits.push_back(w);
      sleeper_(w);
    }
  }
}

// --- HTTP provider ---

ProviderConfig ProviderConfig::from_env(const std::string& preset) {
  ProviderConfig cfg;
  Json models = Json::parse(asset("config/models.json"));
  cfg.base_url = models.value("base_url", std::string{});
  std::string name = preset.empty() ? models.value("default", std::string{}) : preset;
  const Json presets = models.value("presets", Json::object());
  cfg.model = presets.contains(name) ? presets[name].get<std::string>() : name;
  auto env = [](const char* k) -> std::string {
    const char* v = std::getenv(k);
    return v ? v : "";
  };
  if (auto v = env("CLAWENV_BASE_URL"); !v.empty()) cfg.base_url = v;
  if (auto v = env("CLAWENV_MODEL"); !v.empty() && preset.empty()) cfg.model = v;
  for (const char* k : {"CLAWENV_API_KEY", "OPENROUTER_API_KEY", "OPENAI_API_KEY"}) {
    if (auto v = env(k); !v.empty()) {
      cfg.api_key = v;
      break;
    }
  }
  return cfg;
}

Json HttpProvider::request_body(const ChatRequest& req, const std::string& model) {
  Json msgs = Json::array();
  for (const auto& m : req.messages) {
    Json j{{"role", m.role}, {"content", m.content}};
    if (m.role == "assistant" && !m.tool_calls.empty()) {
      Json calls = Json::array();
      for (const auto& c : m.tool_calls) {
        calls.push_back(Json{{"id", c.id},
                             {"type", "function"},
                             {"function", {{"name", c.name}, {"arguments", c.arguments.dump()}}}});
      }
      j["tool_calls"] = std::move(calls);
    }
    if (m.role == "tool") j["tool_call_id"] = m.tool_call_id;
    msgs.push_back(std::move(j));
  }
  Json body{{"model", req.model.empty() ? model : req.model},
            {"messages", std::move(msgs)},
            {"temperature", req.temperature},
            {"max_tokens", req.max_tokens}};
  if (!req.tools.empty()) {
    Json tools = Json::array();
    for (const auto& t : req.tools) {
      tools.push_back(Json{{"type", "function"},
                           {"function", {{"name", t.name}, {"description", t.description}, {"parameters", t.parameters}}}});
    }
    body["tools"] = std::move(tools);
  }
  return body;
}

ChatResponse HttpProvider::parse_response(const Json& body) {
  if (!body.contains("choices") || !body["choices"].is_array() || body["choices"].empty()) {
    throw ProviderError(FailureKind::invalid_response, 200, "response has no choices");
  }
  const Json& msg = body["choices"][0].value("message", Json::object());
  ChatResponse res;
  if (msg.contains("content") && msg["content"].is_string()) res.text = msg["content"].get<std::string>();
  for (const auto& c : msg.value("tool_calls", Json::array())) {
    ToolCall call;
    call.id = c.value("id", std::string{});
    const Json fn = c.value("function", Json::object());
    call.name = fn.value("name", std::string{});
    if (fn.contains("arguments")) {
      const Json& a = fn["arguments"];
      if (a.is_string()) {
        Json parsed = Json::parse(a.get<std::string>(), nullptr, false);
        call.arguments = parsed.is_object() ? parsed : Json::object();
      } else if (a.is_object()) {
        call.arguments = a;
      }
    }
    res.tool_calls.push_back(std::move(call));
  }
  return res;
}

ChatResponse HttpProvider::chat(const ChatRequest& req) {
  HttpClient client(EgressPolicy{true});
  std::vector<std::pair<std::string, std::string>> headers;
  if (!cfg_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + cfg_.api_key);
  std::string url = cfg_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  auto res = client.post(url + "/chat/completions", request_body(req, cfg_.model).dump(), req.timeout_s, headers);
  if (res.status == 0) {
    throw ProviderError(res.timed_out ? FailureKind::timeout : FailureKind::connection, 0,
                        "provider unreachable: " + res.error);
  }
  if (res.status != 200) {
    throw ProviderError(FailureKind::status, res.status,
                        "provider returned HTTP " + std::to_string(res.status) + ": " + res.body.substr(0, 300));
  }
  Json body = Json::parse(res.body, nullptr, false);
  if (body.is_discarded()) throw ProviderError(FailureKind::invalid_response, 200, "provider body is not JSON");
  return parse_response(body);
}

// --- scripted stub ---

ScriptedStub::ScriptedStub(Json script) : script_(std::move(script)) {
  Json rules = script_;
  if (script_.is_object()) {
    rules = script_.value("rules", Json::array());
    if (script_.contains("fallback")) fallback_ = script_["fallback"];
  }
  if (!rules.is_array()) throw std::invalid_argument("stub script: rules must be a list");
  if (!rules.empty() && !rules[0].contains("responses") && !rules[0].contains("match")) {
    rules = Json::array({Json{{"responses", rules}, {"repeat", "last"}}});
  }
  for (const auto& r : rules) {
    Rule rule;
    rule.match = r.value("match", Json::object());
    for (const auto& resp : r.value("responses", Json::array())) rule.responses.push_back(resp);
    if (r.contains("respond")) rule.responses.push_back(r["respond"]);
    rule.repeat = r.value("repeat", std::string{"last"});
    rules_.push_back(std::move(rule));
  }
}

std::shared_ptr<ScriptedStub> ScriptedStub::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stub script " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return std::make_shared<ScriptedStub>(parse_yaml(text));
}

bool ScriptedStub::matches(const Rule& r, const ChatRequest& req) const {
  const Json& m = r.match;
  if (m.contains("contains")) {
    const ChatMessage* last_user = nullptr;
    for (const auto& msg : req.messages) {
      if (msg.role == "user") last_user = &msg;
    }
    if (!last_user || last_user->content.find(m["contains"].get<std::string>()) == std::string::npos) return false;
  }
  if (m.contains("any_contains")) {
    const auto needle = m["any_contains"].get<std::string>();
    bool found = std::any_of(req.messages.begin(), req.messages.end(),
                             [&](const ChatMessage& msg) { return msg.content.find(needle) != std::string::npos; });
    if (!found) return false;
  }
  if (m.contains("system_contains")) {
    const auto needle = m["system_contains"].get<std::string>();
    bool found = std::any_of(req.messages.begin(), req.messages.end(), [&](const ChatMessage& msg) {
      return msg.role == "system" && msg.content.find(needle) != std::string::npos;
    });
    if (!found) return false;
  }
  if (m.contains("turn")) {
    const auto turn = std::count_if(req.messages.begin(), req.messages.end(),
                                    [](const ChatMessage& msg) { return msg.role == "assistant"; });
    if (turn != m["turn"].get<long>()) return false;
  }
  return true;
}

ChatResponse ScriptedStub::chat(const ChatRequest& req) {
  Json entry;
  bool found = false;
  {
    std::lock_guard lock(mu_);
    for (auto& r : rules_) {
      if (r.responses.empty() || !matches(r, req)) continue;
      if (r.cursor < r.responses.size()) {
        entry = r.responses[r.cursor++];
      } else if (r.repeat == "last") {
        entry = r.responses.back();
      } else if (r.repeat == "cycle") {
        entry = r.responses[r.cursor++ % r.responses.size()];
      } else {
        continue;
      }
      found = true;
      break;
    }
    if (!found && fallback_) {
      entry = *fallback_;
      found = true;
    }
    transcript_.push_back(Exchange{req, found ? entry : Json()});
  }
  if (!found) throw ProviderError(FailureKind::invalid_response, 0, "stub script exhausted");

  const double sleep_s = entry.value("sleep_s", 0.0);
  if (sleep_s > 0) {
    if (sleep_s > req.timeout_s) {
      real_sleep(req.timeout_s);
      throw ProviderError(FailureKind::timeout, 0, "stub call timed out");
    }
    real_sleep(sleep_s);
  }
  if (entry.contains("error")) {
    const Json& e = entry["error"];
    const std::string kind = e.value("kind", std::string{"status"});
    if (kind == "timeout") throw ProviderError(FailureKind::timeout, 0, "stub timeout");
    if (kind == "connection") throw ProviderError(FailureKind::connection, 0, "stub connection failure");
    const int status = e.value("status", 500);
    throw ProviderError(FailureKind::status, status, "stub HTTP " + std::to_string(status));
  }

  ChatResponse res;
  if (entry.contains("text")) {
    res.text = entry["text"].is_string() ? entry["text"].get<std::string>() : entry["text"].dump();
  } else if (entry.contains("json")) {
    res.text = entry["json"].dump();
  }
  const auto turn = std::count_if(req.messages.begin(), req.messages.end(),
                                  [](const ChatMessage& msg) { return msg.role == "assistant"; });
  int i = 0;
  for (const auto& c : entry.value("tool_calls", Json::array())) {
    ToolCall call;
    call.id = c.value("id", "call_" + std::to_string(turn) + "_" + std::to_string(i));
    call.name = c.value("name", std::string{});
    call.arguments = c.value("arguments", Json::object());
    res.tool_calls.push_back(std::move(call));
    ++i;
  }
  return res;
}

void ScriptedStub::reset() {
  std::lock_guard lock(mu_);
  for (auto& r : rules_) r.cursor = 0;
  transcript_.clear();
}

std::vector<ScriptedStub::Exchange> ScriptedStub::transcript() const {
  std::lock_guard lock(mu_);
  return transcript_;
}

int ScriptedStub::calls() const {
  std::lock_guard lock(mu_);
  return static_cast<int>(transcript_.size());
}

std::pair<std::vector<ToolCall>, std::string> parse_xml_tool_calls(const std::string& text) {
  static constexpr std::string_view open = "<tool_call>";
  static constexpr std::string_view close = "</tool_call>";
  std::vector<ToolCall> calls;
  std::string rest;
  std::size_t pos = 0;
  while (true) {
    auto a = text.find(open, pos);
    if (a == std::string::npos) break;
    auto b = text.find(close, a + open.size());
    if (b == std::string::npos) break;
    rest += text.substr(pos, a - pos);
    auto body = extract_json_object(text.substr(a + open.size(), b - a - open.size()));
    if (body && body->contains("name")) {
      ToolCall c;
      c.id = "xml_" + std::to_string(calls.size());
      c.name = (*body)["name"].is_string() ? (*body)["name"].get<std::string>() : "";
      for (const char* key : {"arguments", "parameters", "args", "input"}) {
        if (body->contains(key)) {
          const Json& a2 = (*body)[key];
          if (a2.is_object()) c.arguments = a2;
          else if (a2.is_string()) {
            Json p = Json::parse(a2.get<std::string>(), nullptr, false);
            if (p.is_object()) c.arguments = p;
          }
          break;
        }
      }
      calls.push_back(std::move(c));
    }
    pos = b + close.size();
  }
  rest += text.substr(pos);
  return {std::move(calls), trim(rest)};
}

}  // namespace clawenv
