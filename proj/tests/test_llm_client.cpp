// SPDX-License-Identifier: Apache-2.0
#include "clawenv/llm_client.hpp"
#include "support.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <thread>

using namespace clawenv;
using namespace clawenv::testing;

namespace {

Json errors_then_ok(int status, int n) {
  Json seq = Json::array();
  for (int i = 0; i < n; ++i) seq.push_back({{"error", {{"status", status}}}});
  seq.push_back({{"text", "ok"}});
  return seq;
}

}  // namespace

TEST(Retry, RetryableStatusesRecover) {
  for (int status : {429, 500, 502, 503, 529}) {
    for (int n = 0; n <= 5; ++n) {
      auto log = std::make_shared<SleepLog>();
      std::shared_ptr<ScriptedStub> stub;
      auto c = stub_client(errors_then_ok(status, n), &stub, 1.0, log);
      auto res = c->complete_chat(ChatRequest::simple("", "hi"));
      EXPECT_EQ(res.text, "ok");
      EXPECT_EQ(res.attempts_used, n + 1) << status;
      EXPECT_EQ(stub->calls(), n + 1);
      EXPECT_EQ(log->waits.size(), static_cast<std::size_t>(n));
    }
  }
}

TEST(Retry, AuthFailsImmediately) {
  std::shared_ptr<ScriptedStub> stub;
  auto log = std::make_shared<SleepLog>();
  auto c = stub_client(errors_then_ok(401, 1), &stub, 1.0, log);
  try {
    c->complete_chat(ChatRequest::simple("", "hi"));
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.status(), 401);
    EXPECT_EQ(e.attempts(), 1);
  }
  EXPECT_EQ(stub->calls(), 1);
  EXPECT_TRUE(log->waits.empty());
}

TEST(Retry, SixFailuresExhaust) {
  std::shared_ptr<ScriptedStub> stub;
  auto c = stub_client(errors_then_ok(503, 6), &stub);
  try {
    c->complete_chat(ChatRequest::simple("", "hi"));
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.status(), 503);
    EXPECT_EQ(e.attempts(), 6);
  }
  EXPECT_EQ(stub->calls(), 6);
}

TEST(Retry, TimeoutsRetry) {
  std::shared_ptr<ScriptedStub> stub;
  auto c = stub_client(Json::array({{{"error", {{"kind", "timeout"}}}}, {{"text", "ok"}}}), &stub);
  EXPECT_EQ(c->complete_chat(ChatRequest::simple("", "hi")).attempts_used, 2);
}

TEST(Retry, WaitBounds) {
  auto log = std::make_shared<SleepLog>();
  auto c = stub_client(errors_then_ok(503, 5), nullptr, 1.0, log);
  auto res = c->complete_chat(ChatRequest::simple("", "hi"));
  ASSERT_EQ(res.waits.size(), 5u);
  EXPECT_EQ(res.waits, log->waits);
  for (std::size_t k = 0; k < res.waits.size(); ++k) {
    EXPECT_GE(res.waits[k], 2.0 * (k + 1));
    EXPECT_LE(res.waits[k], 4.0 * (k + 1));
  }
  RetryPolicy p;
  EXPECT_EQ(p.wait(0, 0.0), 2.0);
  EXPECT_EQ(p.wait(1, 0.0), 4.0);
  EXPECT_EQ(p.wait(1, 1.0), 8.0);
  for (int k = 0; k < 4; ++k) EXPECT_LE(p.wait(k, 0.5), p.wait(k + 1, 0.5));
  p.time_scale = 0.01;
  EXPECT_NEAR(p.wait(0, 0.5), 0.03, 1e-12);
}

TEST(Retry, DeadlineStopsRetrying) {
  std::shared_ptr<ScriptedStub> stub;
  auto c = stub_client(errors_then_ok(503, 3), &stub);
  auto req = ChatRequest::simple("", "hi");
  req.deadline = Clock::now() + std::chrono::milliseconds(500);  // first wait is at least 2 s
  EXPECT_THROW(c->complete_chat(req), ProviderError);
  EXPECT_EQ(stub->calls(), 1);
}

TEST(Stub, Matching) {
  Json script{{"rules", Json::array({{{"match", {{"system_contains", "judge"}}}, {"responses", Json::array({{{"text", "J"}}})}},
                                     {{"match", {{"turn", 1}}}, {"responses", Json::array({{{"text", "T1"}}})}},
                                     {{"match", {{"contains", "hello"}}},
                                      {"responses", Json::array({{{"text", "A"}}, {{"text", "B"}}})},
                                      {"repeat", "cycle"}},
                                     {{"match", {{"contains", "once"}}}, {"responses", Json::array({{{"text", "O"}}})}, {"repeat", "none"}}})},
              {"fallback", {{"text", "F"}}}};
  auto stub = std::make_shared<ScriptedStub>(script);
  EXPECT_EQ(stub->chat(ChatRequest::simple("you are a judge", "x")).text, "J");
  EXPECT_EQ(stub->chat(ChatRequest::simple("", "say hello")).text, "A");
  EXPECT_EQ(stub->chat(ChatRequest::simple("", "say hello")).text, "B");
  EXPECT_EQ(stub->chat(ChatRequest::simple("", "say hello")).text, "A");
  EXPECT_EQ(stub->chat(ChatRequest::simple("", "once")).text, "O");
  EXPECT_EQ(stub->chat(ChatRequest::simple("", "once")).text, "F");
  auto req = ChatRequest::simple("", "q");
  req.messages.push_back(ChatMessage{"assistant", "a"});
  req.messages.push_back(ChatMessage{"user", "hello"});
  EXPECT_EQ(stub->chat(req).text, "T1");
  EXPECT_EQ(stub->calls(), 7);
  stub->reset();
  EXPECT_EQ(stub->calls(), 0);
  EXPECT_EQ(stub->chat(ChatRequest::simple("", "say hello")).text, "A");
}

TEST(Stub, JsonAndToolCalls) {
  auto stub = std::make_shared<ScriptedStub>(
      Json::array({{{"json", {{"a", 1}}}}, {{"text", "t"}, {"tool_calls", Json::array({{{"name", "list_tasks"}, {"arguments", {{"x", 1}}}}})}}}));
  EXPECT_EQ(Json::parse(stub->chat(ChatRequest::simple("", "")).text), (Json{{"a", 1}}));
  auto r = stub->chat(ChatRequest::simple("", ""));
  ASSERT_EQ(r.tool_calls.size(), 1u);
  EXPECT_EQ(r.tool_calls[0].name, "list_tasks");
  EXPECT_EQ(r.tool_calls[0].arguments["x"], 1);
  EXPECT_FALSE(r.tool_calls[0].id.empty());
}

TEST(Stub, SleepPastTimeout) {
  auto stub = std::make_shared<ScriptedStub>(Json::array({{{"sleep_s", 5.0}, {"text", "late"}}}));
  auto req = ChatRequest::simple("", "", 0.05);
  auto t0 = Clock::now();
  try {
    stub->chat(req);
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.kind(), FailureKind::timeout);
  }
  EXPECT_LT(std::chrono::duration<double>(Clock::now() - t0).count(), 1.0);
}

TEST(XmlToolCalls, Parse) {
  auto [calls, rest] = parse_xml_tool_calls(
      "Let me check.\n<tool_call>{\"name\": \"list_tasks\", \"arguments\": {\"status\": \"open\"}}</tool_call>\n"
      "<tool_call>{\"name\": \"get_task\", \"arguments\": {\"task_id\": \"task-001\"}}</tool_call>");
  ASSERT_EQ(calls.size(), 2u);
  EXPECT_EQ(calls[0].name, "list_tasks");
  EXPECT_EQ(calls[0].arguments["status"], "open");
  EXPECT_EQ(calls[1].arguments["task_id"], "task-001");
  EXPECT_EQ(rest.find("<tool_call>"), std::string::npos);
  EXPECT_NE(rest.find("Let me check."), std::string::npos);
  EXPECT_TRUE(parse_xml_tool_calls("plain answer").first.empty());
  EXPECT_TRUE(parse_xml_tool_calls("<tool_call>not json</tool_call>").first.empty());
}

TEST(HttpProvider, WireFormat) {
  ChatRequest req = ChatRequest::simple("sys", "hi");
  req.tools.push_back(ToolDefinition{"list_tasks", "List tasks"});
  req.messages.push_back(ChatMessage{"assistant", "", {ToolCall{"c1", "list_tasks", {{"a", 1}}}}});
  req.messages.push_back(ChatMessage{"tool", "[]", {}, "c1", "list_tasks"});
  auto body = HttpProvider::request_body(req, "m");
  EXPECT_EQ(body["model"], "m");
  EXPECT_EQ(body["messages"].size(), 4u);
  EXPECT_EQ(body["messages"][2]["tool_calls"][0]["function"]["arguments"], "{\"a\":1}");
  EXPECT_EQ(body["messages"][3]["tool_call_id"], "c1");
  EXPECT_EQ(body["tools"][0]["function"]["name"], "list_tasks");

  Json resp{{"choices", Json::array({{{"message",
                                       {{"content", "done"},
                                        {"tool_calls", Json::array({{{"id", "x"},
                                                                     {"type", "function"},
                                                                     {"function", {{"name", "get_task"}, {"arguments", "{\"task_id\":\"t\"}"}}}}})}}}}})}};
  auto r = HttpProvider::parse_response(resp);
  EXPECT_EQ(r.text, "done");
  ASSERT_EQ(r.tool_calls.size(), 1u);
  EXPECT_EQ(r.tool_calls[0].arguments["task_id"], "t");
  EXPECT_THROW(HttpProvider::parse_response(Json::object()), ProviderError);
}

TEST(HttpProvider, RetriesOverHttp) {
  httplib::Server srv;
  std::atomic<int> hits{0};
  std::string auth;
  srv.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    if (++hits < 3) {
      res.status = 503;
      res.set_content("{\"error\":\"busy\"}", "application/json");
      return;
    }
    res.set_content(R"({"choices":[{"message":{"content":"hello"}}]})", "application/json");
  });
  srv.Post("/bad/chat/completions", [&](const httplib::Request&, httplib::Response& res) { res.status = 401; });
  const int port = srv.bind_to_any_port("127.0.0.1");
  std::thread th([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();

  ProviderConfig cfg{"http://127.0.0.1:" + std::to_string(port) + "/v1", "k", "m"};
  RetryPolicy p;
  p.time_scale = 0.001;
  LlmClient c(std::make_shared<HttpProvider>(cfg), p, 1);
  auto res = c.complete_chat(ChatRequest::simple("", "hi"));
  EXPECT_EQ(res.text, "hello");
  EXPECT_EQ(res.attempts_used, 3);
  EXPECT_EQ(auth, "Bearer k");

  ProviderConfig bad{"http://127.0.0.1:" + std::to_string(port) + "/bad", "", "m"};
  LlmClient b(std::make_shared<HttpProvider>(bad), p, 1);
  try {
    b.complete_chat(ChatRequest::simple("", "hi"));
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.status(), 401);
    EXPECT_EQ(e.attempts(), 1);
  }
  srv.stop();
  th.join();
}

TEST(ChatMessages, JsonRoundTrip) {
  ChatMessage m{"assistant", "x", {ToolCall{"id1", "n", {{"k", "v"}}}}};
  EXPECT_EQ(chat_message_from_json(to_json(m)), m);
  ChatMessage t{"tool", "out", {}, "id1", "n"};
  EXPECT_EQ(chat_message_from_json(to_json(t)), t);
}
