// SPDX-License-Identifier: Apache-2.0
#include "clawenv/harness.hpp"

#include "clawenv/errors.hpp"
#include "clawenv/process.hpp"
#include "clawenv/text.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace clawenv {

std::string_view to_string(HarnessTier t) {
  switch (t) {
    case HarnessTier::native_plugin: return "native_plugin";
    case HarnessTier::mcp_stdio: return "mcp_stdio";
    case HarnessTier::skill_document: return "skill_document";
  }
  return "native_plugin";
}

HarnessTier harness_tier_from_string(std::string_view s) {
  if (s == "native_plugin" || s == "native" || s == "1") return HarnessTier::native_plugin;
  if (s == "mcp_stdio" || s == "mcp" || s == "2") return HarnessTier::mcp_stdio;
  if (s == "skill_document" || s == "skill" || s == "3") return HarnessTier::skill_document;
  throw std::invalid_argument("unknown harness tier \"" + std::string(s) + "\"");
}

namespace {

std::string schema_type(const std::string& t) {
  if (t == "integer" || t == "number" || t == "boolean" || t == "array" || t == "object") return t;
  return "string";
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw SandboxError("cannot write " + p.string());
  out << content;
}

}  // namespace

Json input_schema_for(const Tool& tool, const EndpointSpec* endpoint) {
  Json props = Json::object();
  Json required = Json::array();
  if (endpoint) {
    for (const auto& p : endpoint->params) {
      Json prop{{"type", schema_type(p.type)}};
      if (p.type == "any") prop = Json::object();
      if (!p.description.empty()) prop["description"] = p.description;
      props[p.name] = std::move(prop);
      if (p.required) required.push_back(p.name);
    }
  } else if (tool.params.is_object()) {
    for (const auto& [name, v] : tool.params.items()) {
      Json prop{{"type", "string"}};
      if (v.is_string()) {
        std::string t = v.get<std::string>();
        const bool req = !t.empty() && t.back() == '!';
        if (req || (!t.empty() && t.back() == '?')) t.pop_back();
        if (t == "integer" || t == "number" || t == "boolean" || t == "array" || t == "object") prop["type"] = t;
        else if (t != "string") prop["description"] = t;
        if (req) required.push_back(name);
      } else if (v.is_object()) {
        prop["type"] = schema_type(v.value("type", std::string{"string"}));
        if (v.contains("description")) prop["description"] = v["description"];
        if (v.value("required", false)) required.push_back(name);
      }
      props[name] = std::move(prop);
    }
  }
  Json schema{{"type", "object"}, {"properties", std::move(props)}};
  if (!required.empty()) schema["required"] = std::move(required);
  return schema;
}

std::vector<ToolDescriptor> tool_descriptors(const TaskConfig& cfg, const ServiceRegistry& registry,
                                             const std::string& services_endpoint) {
  std::vector<ToolDescriptor> out;
  for (const auto& t : cfg.tools) {
    const EndpointSpec* ep = registry.route(t.service, t.endpoint);
    ToolDescriptor d;
    d.name = t.name;
    d.service = t.service;
    d.endpoint = t.endpoint;
    d.url = services_endpoint + t.endpoint;
    d.description = !t.description.empty() ? t.description : (ep ? ep->description : std::string{});
    if (d.description.empty()) d.description = t.name + " on " + t.service;
    d.input_schema = input_schema_for(t, ep);
    out.push_back(std::move(d));
  }
  return out;
}

namespace {

Json example_body(const Json& schema) {
  Json body = Json::object();
  const Json props = schema.value("properties", Json::object());
  for (const auto& name : schema.value("required", Json::array())) {
    const std::string n = name.get<std::string>();
    const std::string t = props.contains(n) ? props[n].value("type", std::string{"string"}) : "string";
    if (t == "integer") body[n] = 1;
    else if (t == "number") body[n] = 1.0;
    else if (t == "boolean") body[n] = true;
    else if (t == "array") body[n] = Json::array();
    else if (t == "object") body[n] = Json::object();
    else body[n] = "<" + n + ">";
  }
  return body;
}

}  // namespace

std::string skill_document(const std::vector<ToolDescriptor>& tools, const std::string& services_endpoint) {
  std::ostringstream md;
  md << "# Mock API skill\n\n"
     << "The task's services are served at " << services_endpoint << " (also exported as $CLAWENV_API).\n"
     << "Every endpoint takes POST with a JSON body and answers with JSON. Run the commands below\n"
     << "through the `shell` tool. Calls can fail transiently with 429 or 500; retry them.\n\n"
     << "| Tool | Service | Endpoint | Parameters |\n|---|---|---|---|\n";
  for (const auto& t : tools) {
    std::string params;
    const Json props = t.input_schema.value("properties", Json::object());
    for (const auto& [name, _] : props.items()) {
      params += (params.empty() ? "" : ", ") + name;
    }
    md << "| " << t.name << " | " << t.service << " | POST " << t.endpoint << " | " << params << " |\n";
  }
  for (const auto& t : tools) {
    md << "\n## " << t.name << "\n\n" << t.description << "\n\n```bash\n"
       << "curl -s -X POST " << t.url << " -H 'Content-Type: application/json' -d '"
       << replace_all(example_body(t.input_schema).dump(), "'", "'\\''") << "'\n```\n";
  }
  return md.str();
}

HarnessArtifacts prepare_harness(HarnessTier tier, const TaskConfig& cfg, const ServiceRegistry& registry,
                                 const std::string& services_endpoint, const std::filesystem::path& dir,
                                 const std::filesystem::path& workspace_root,
                                 const std::vector<std::string>& mcp_command) {
  HarnessArtifacts a;
  a.tier = tier;
  a.prompt = cfg.prompt;
  a.services_endpoint = services_endpoint;
  a.dir = dir;
  a.workspace_root = workspace_root;
  a.workspace_tools = !workspace_root.empty() && !cfg.files.empty();
  a.mcp_command = mcp_command;
  a.tools = tool_descriptors(cfg, registry, services_endpoint);
  if (a.tools.empty()) return a;

  switch (tier) {
    case HarnessTier::native_plugin: {
      Json tools = Json::array();
      for (const auto& t : a.tools) {
        tools.push_back(Json{{"name", t.name},
                             {"service", t.service},
                             {"endpoint", t.endpoint},
                             {"url", t.url},
                             {"description", t.description},
                             {"parameters", t.input_schema}});
      }
      a.config = Json{{"plugin", "clawenv-eval"}, {"services_endpoint", services_endpoint}, {"tools", tools}};
      a.files.push_back(dir / "tools.json");
      write_file(a.files.back(), a.config.dump(2) + "\n");
      break;
    }
    case HarnessTier::mcp_stdio: {
      if (mcp_command.empty()) throw SandboxError("mcp_stdio tier needs a server command");
      Json tools = Json::array();
      for (const auto& t : a.tools) {
        tools.push_back(Json{{"name", t.name}, {"description", t.description}, {"url", t.url}, {"inputSchema", t.input_schema}});
      }
      Json manifest{{"services_endpoint", services_endpoint}, {"tools", tools}};
      const auto manifest_path = dir / "mcp_manifest.json";
      write_file(manifest_path, manifest.dump(2) + "\n");
      Json args = Json::array();
      for (std::size_t i = 1; i < mcp_command.size(); ++i) args.push_back(mcp_command[i]);
      args.push_back("--manifest");
      args.push_back(manifest_path.string());
      a.config = Json{{"mcpServers", {{"clawenv", {{"command", mcp_command[0]}, {"args", args}}}}}};
      a.files.push_back(manifest_path);
      a.files.push_back(dir / ".mcp.json");
      write_file(a.files.back(), a.config.dump(2) + "\n");
      break;
    }
    case HarnessTier::skill_document: {
      const std::string doc = skill_document(a.tools, services_endpoint);
      a.files.push_back(dir / "SKILL.md");
      write_file(a.files.back(), doc);
      a.prompt = cfg.prompt + "\n\n" + doc;
      a.config = Json{{"skill", a.files.back().string()}};
      break;
    }
  }
  return a;
}

// --- building blocks ---

ToolResult call_endpoint(const HttpClient& client, const std::string& url, const Json& args, const ToolCall& call) {
  ToolResult r{call.id, call.name, 0, {}};
  try {
    auto res = client.post_json(url, args.is_object() ? args : Json::object());
    if (res.status == 0) {
      r.content = "error: request failed: " + res.error;
    } else {
      r.status = res.status;
      r.content = res.body;
    }
  } catch (const EgressDenied& e) {
    r.content = std::string("error: ") + e.what();
  }
  return r;
}

std::vector<ToolDefinition> workspace_tool_definitions() {
  return {
      {"read_file", "Read a file under /workspace/",
       Json{{"type", "object"}, {"properties", {{"path", {{"type", "string"}}}}}, {"required", {"path"}}}},
      {"write_file", "Create or overwrite a file under /workspace/",
       Json{{"type", "object"},
            {"properties", {{"path", {{"type", "string"}}}, {"content", {{"type", "string"}}}}},
            {"required", {"path", "content"}}}},
      {"list_files", "List files under /workspace/", Json{{"type", "object"}, {"properties", Json::object()}}},
  };
}

namespace {

std::optional<std::filesystem::path> resolve_workspace(const std::filesystem::path& root, const std::string& path) {
  std::string rel = path;
  if (rel.starts_with(kWorkspacePrefix)) rel = rel.substr(kWorkspacePrefix.size());
  else if (rel == "/workspace") rel.clear();
  else if (!rel.empty() && rel.front() == '/') return std::nullopt;
  auto p = (root / rel).lexically_normal();
  auto r = root.lexically_normal();
  auto [a, b] = std::mismatch(r.begin(), r.end(), p.begin(), p.end());
  if (a != r.end() && !a->empty()) return std::nullopt;
  return p;
}

}  // namespace

std::optional<ToolResult> call_workspace_tool(const std::filesystem::path& root, const ToolCall& call) {
  if (call.name != "read_file" && call.name != "write_file" && call.name != "list_files") return std::nullopt;
  ToolResult r{call.id, call.name, 200, {}};
  auto fail = [&](std::string msg) {
    r.status = 400;
    r.content = "error: " + msg;
    return r;
  };
  if (call.name == "list_files") {
    std::string listing;
    if (std::filesystem::exists(root)) {
      std::vector<std::string> paths;
      for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) {
          paths.push_back(std::string(kWorkspacePrefix) + std::filesystem::relative(e.path(), root).generic_string());
        }
      }
      std::sort(paths.begin(), paths.end());
      for (const auto& p : paths) listing += p + "\n";
    }
    r.content = listing.empty() ? "(empty)" : listing;
    return r;
  }
  const std::string path = call.arguments.value("path", std::string{});
  auto target = resolve_workspace(root, path);
  if (!target || path.empty()) return fail("path must be under /workspace/");
  if (call.name == "read_file") {
    std::ifstream in(*target, std::ios::binary);
    if (!in) return fail("no such file " + path);
    r.content.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    return r;
  }
  std::filesystem::create_directories(target->parent_path());
  std::ofstream out(*target, std::ios::binary);
  if (!out) return fail("cannot write " + path);
  const Json& content = call.arguments.contains("content") ? call.arguments["content"] : Json("");
  out << (content.is_string() ? content.get<std::string>() : content.dump());
  r.content = "wrote " + path;
  return r;
}

std::vector<std::string> shell_split(const std::string& command, const std::map<std::string, std::string>& vars) {
  std::vector<std::string> words;
  std::string cur;
  bool in_word = false;
  auto expand = [&](std::size_t& i) {
    std::size_t start = i + 1;
    std::string name;
    if (start < command.size() && command[start] == '{') {
      auto close = command.find('}', start);
      if (close == std::string::npos) throw std::invalid_argument("unterminated ${");
      name = command.substr(start + 1, close - start - 1);
      i = close;
    } else {
      std::size_t j = start;
      while (j < command.size() && (std::isalnum(static_cast<unsigned char>(command[j])) || command[j] == '_')) ++j;
      if (j == start) {
        cur += '$';
        return;
      }
      name = command.substr(start, j - start);
      i = j - 1;
    }
    auto it = vars.find(name);
    if (it != vars.end()) cur += it->second;
  };
  for (std::size_t i = 0; i < command.size(); ++i) {
    const char c = command[i];
    if (c == '\'') {
      auto close = command.find('\'', i + 1);
      if (close == std::string::npos) throw std::invalid_argument("unterminated single quote");
      cur += command.substr(i + 1, close - i - 1);
      i = close;
      in_word = true;
    } else if (c == '"') {
      in_word = true;
      ++i;
      for (; i < command.size() && command[i] != '"'; ++i) {
        if (command[i] == '\\' && i + 1 < command.size() &&
            (command[i + 1] == '"' || command[i + 1] == '\\' || command[i + 1] == '$')) {
          cur += command[++i];
        } else if (command[i] == '$') {
          expand(i);
        } else {
          cur += command[i];
        }
      }
      if (i >= command.size()) throw std::invalid_argument("unterminated double quote");
    } else if (c == '\\') {
      if (i + 1 < command.size()) {
        if (command[i + 1] != '\n') cur += command[i + 1];
        ++i;
        in_word = true;
      }
    } else if (c == '$') {
      expand(i);
      in_word = true;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      if (in_word) words.push_back(std::move(cur));
      cur.clear();
      in_word = false;
    } else {
      cur += c;
      in_word = true;
    }
  }
  if (in_word) words.push_back(std::move(cur));
  return words;
}

CurlRequest parse_curl(const std::vector<std::string>& words) {
  if (words.empty() || words[0] != "curl") throw std::invalid_argument("not a curl command");
  CurlRequest req;
  bool have_body = false;
  for (std::size_t i = 1; i < words.size(); ++i) {
    const std::string& w = words[i];
    auto next = [&]() -> const std::string& {
      if (i + 1 >= words.size()) throw std::invalid_argument("option " + w + " needs a value");
      return words[++i];
    };
    if (w == "-s" || w == "--silent" || w == "-S" || w == "--show-error" || w == "-f" || w == "--fail" ||
        w == "-sS" || w == "-fsS" || w == "-sf" || w == "-L" || w == "--location") {
      continue;
    } else if (w == "-X" || w == "--request") {
      req.method = next();
    } else if (w == "-H" || w == "--header") {
      next();
    } else if (w == "-d" || w == "--data" || w == "--data-raw" || w == "--data-binary" || w == "--json") {
      req.body = next();
      have_body = true;
    } else if (w.starts_with("-")) {
      throw std::invalid_argument("unsupported curl option " + w);
    } else {
      req.url = w;
    }
  }
  if (req.url.empty()) throw std::invalid_argument("curl: no URL given");
  if (req.method.empty()) req.method = have_body ? "POST" : "GET";
  return req;
}

namespace {

std::string join_content(const ToolResult& r) { return r.content; }

class NativeExecutor : public ToolExecutor {
public:
  NativeExecutor(const HarnessArtifacts& a, EgressPolicy egress) : a_(a), client_(egress) {}

  std::vector<ToolDefinition> definitions() override {
    std::vector<ToolDefinition> defs;
    for (const auto& t : a_.tools) defs.push_back(ToolDefinition{t.name, t.description, t.input_schema});
    if (a_.workspace_tools) {
      for (auto& d : workspace_tool_definitions()) defs.push_back(std::move(d));
    }
    return defs;
  }

  ToolResult execute(const ToolCall& call) override {
    if (a_.workspace_tools) {
      if (auto r = call_workspace_tool(a_.workspace_root, call)) return *r;
    }
    for (const auto& t : a_.tools) {
      if (t.name == call.name) return call_endpoint(client_, t.url, call.arguments, call);
    }
    return ToolResult{call.id, call.name, 0, "error: unknown tool \"" + call.name + "\""};
  }

private:
  HarnessArtifacts a_;
  HttpClient client_;
};

class McpExecutor : public ToolExecutor {
public:
  explicit McpExecutor(const HarnessArtifacts& a) : a_(a) {
    const Json server = a.config["mcpServers"]["clawenv"];
    std::vector<std::string> argv{server["command"].get<std::string>()};
    for (const auto& arg : server["args"]) argv.push_back(arg.get<std::string>());
    child_ = std::make_unique<ChildProcess>(argv);
    rpc("initialize", Json{{"protocolVersion", "2024-11-05"},
                           {"capabilities", Json::object()},
                           {"clientInfo", {{"name", "clawenv-agent"}, {"version", "1"}}}});
    child_->write_line(Json{{"jsonrpc", "2.0"}, {"method", "notifications/initialized"}}.dump());
    Json listed = rpc("tools/list", Json::object());
    for (const auto& t : listed.value("tools", Json::array())) {
      defs_.push_back(ToolDefinition{t.value("name", std::string{}), t.value("description", std::string{}),
                                     t.value("inputSchema", Json{{"type", "object"}})});
    }
  }

  std::vector<ToolDefinition> definitions() override {
    auto defs = defs_;
    if (a_.workspace_tools) {
      for (auto& d : workspace_tool_definitions()) defs.push_back(std::move(d));
    }
    return defs;
  }

  ToolResult execute(const ToolCall& call) override {
    if (a_.workspace_tools) {
      if (auto r = call_workspace_tool(a_.workspace_root, call)) return *r;
    }
    ToolResult r{call.id, call.name, 0, {}};
    try {
      Json res = rpc("tools/call", Json{{"name", call.name}, {"arguments", call.arguments}});
      for (const auto& c : res.value("content", Json::array())) {
        if (c.value("type", std::string{}) == "text") r.content += c.value("text", std::string{});
      }
      r.status = res.value("structuredContent", Json::object()).value("status", 0);
    } catch (const std::exception& e) {
      r.content = std::string("error: ") + e.what();
    }
    return r;
  }

private:
  Json rpc(const std::string& method, const Json& params) {
    const int id = ++next_id_;
    if (!child_->write_line(Json{{"jsonrpc", "2.0"}, {"id", id}, {"method", method}, {"params", params}}.dump())) {
      throw SandboxError("MCP server is not accepting input");
    }
    while (true) {
      auto line = child_->read_line(120.0);
      if (!line) throw SandboxError("MCP server did not answer " + method);
      Json msg = Json::parse(*line, nullptr, false);
      if (msg.is_discarded() || !msg.contains("id") || msg["id"] != id) continue;
      if (msg.contains("error")) throw SandboxError("MCP error: " + msg["error"].value("message", std::string{}));
      return msg.value("result", Json::object());
    }
  }

  HarnessArtifacts a_;
  std::unique_ptr<ChildProcess> child_;
  std::vector<ToolDefinition> defs_;
  int next_id_ = 0;
};

bool network_namespace_available() {
  static const bool ok = [] {
    ProcessOptions o;
    o.timeout_s = 5;
    return run_process({"unshare", "-rn", "true"}, o).exit_code == 0;
  }();
  return ok;
}

class ShellExecutor : public ToolExecutor {
public:
  ShellExecutor(const HarnessArtifacts& a, EgressPolicy egress) : a_(a), egress_(egress), client_(egress) {}

  std::vector<ToolDefinition> definitions() override {
    if (a_.tools.empty() && !a_.workspace_tools) return {};
    return {ToolDefinition{"shell", "Run a shell command (curl reaches the task's services)",
                           Json{{"type", "object"},
                                {"properties", {{"command", {{"type", "string"}}}}},
                                {"required", {"command"}}}}};
  }

  ToolResult execute(const ToolCall& call) override {
    ToolResult r{call.id, call.name, 0, {}};
    if (call.name != "shell") {
      r.content = "error: unknown tool \"" + call.name + "\"; use shell";
      return r;
    }
    const std::string command = trim(call.arguments.value("command", std::string{}));
    std::vector<std::string> words;
    try {
      words = shell_split(command, {{"CLAWENV_API", a_.services_endpoint}});
    } catch (const std::invalid_argument& e) {
      r.content = std::string("error: ") + e.what();
      return r;
    }
    if (!words.empty() && words[0] == "curl") {
      try {
        CurlRequest req = parse_curl(words);
        if (req.method != "POST") {
          auto res = client_.get(req.url);
          r.status = res.status;
          r.content = res.status ? res.body : "curl: " + res.error;
          return r;
        }
        Json body = req.body.empty() ? Json::object() : Json::parse(req.body, nullptr, false);
        if (body.is_discarded()) {
          auto res = client_.post(req.url, req.body);
          r.status = res.status;
          r.content = res.status ? res.body : "curl: " + res.error;
          return r;
        }
        return call_endpoint(client_, req.url, body, call);
      } catch (const EgressDenied& e) {
        r.content = std::string("curl: ") + e.what();
      } catch (const std::invalid_argument& e) {
        r.content = std::string("curl: ") + e.what();
      }
      return r;
    }
    if (a_.workspace_root.empty()) {
      r.content = "error: only curl is available in this shell";
      return r;
    }
    ProcessOptions opts;
    opts.cwd = a_.workspace_root;
    opts.timeout_s = 60;
    opts.env["CLAWENV_API"] = a_.services_endpoint;
    const std::string rewritten = replace_all(command, kWorkspacePrefix, a_.workspace_root.string() + "/");
    std::vector<std::string> argv{"/bin/sh", "-c", rewritten};
    if (!egress_.allow_external && network_namespace_available()) argv.insert(argv.begin(), {"unshare", "-rn"});
    auto res = run_process(argv, opts);
    r.content = res.out + res.err;
    if (res.timed_out) r.content += "\n(command timed out)";
    else r.content += "\n(exit code " + std::to_string(res.exit_code) + ")";
    return r;
  }

private:
  HarnessArtifacts a_;
  EgressPolicy egress_;
  HttpClient client_;
};

}  // namespace

std::unique_ptr<ToolExecutor> make_executor(const HarnessArtifacts& artifacts, EgressPolicy egress) {
  switch (artifacts.tier) {
    case HarnessTier::native_plugin: return std::make_unique<NativeExecutor>(artifacts, egress);
    case HarnessTier::mcp_stdio:
      if (artifacts.tools.empty()) return std::make_unique<NativeExecutor>(artifacts, egress);
      return std::make_unique<McpExecutor>(artifacts);
    case HarnessTier::skill_document: return std::make_unique<ShellExecutor>(artifacts, egress);
  }
  return std::make_unique<NativeExecutor>(artifacts, egress);
}

int run_mcp_server(std::istream& in, std::ostream& out, const Json& manifest) {
  HttpClient client;
  const std::filesystem::path workspace = manifest.value("workspace_root", std::string{});
  const Json tools = manifest.value("tools", Json::array());
  auto reply = [&](const Json& id, Json result) {
    out << Json{{"jsonrpc", "2.0"}, {"id", id}, {"result", std::move(result)}}.dump() << "\n" << std::flush;
  };
  auto error = [&](const Json& id, int code, const std::string& msg) {
    out << Json{{"jsonrpc", "2.0"}, {"id", id}, {"error", {{"code", code}, {"message", msg}}}}.dump() << "\n"
        << std::flush;
  };
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    Json msg = Json::parse(line, nullptr, false);
    if (msg.is_discarded() || !msg.is_object()) {
      error(nullptr, -32700, "parse error");
      continue;
    }
    if (!msg.contains("id")) continue;  // notification
    const Json id = msg["id"];
    const std::string method = msg.value("method", std::string{});
    const Json params = msg.value("params", Json::object());
    if (method == "initialize") {
      reply(id, Json{{"protocolVersion", params.value("protocolVersion", std::string{"2024-11-05"})},
                     {"capabilities", {{"tools", Json::object()}}},
                     {"serverInfo", {{"name", "clawenv"}, {"version", "1.0"}}}});
    } else if (method == "tools/list") {
      Json listed = Json::array();
      for (const auto& t : tools) {
        listed.push_back(Json{{"name", t["name"]}, {"description", t.value("description", std::string{})},
                              {"inputSchema", t.value("inputSchema", Json{{"type", "object"}})}});
      }
      reply(id, Json{{"tools", listed}});
    } else if (method == "tools/call") {
      const std::string name = params.value("name", std::string{});
      ToolCall call{"mcp", name, params.value("arguments", Json::object())};
      std::optional<ToolResult> result;
      if (!workspace.empty()) result = call_workspace_tool(workspace, call);
      if (!result) {
        for (const auto& t : tools) {
          if (t.value("name", std::string{}) == name) {
            result = call_endpoint(client, t.value("url", std::string{}), call.arguments, call);
            break;
          }
        }
      }
      if (!result) {
        error(id, -32602, "unknown tool " + name);
        continue;
      }
      reply(id, Json{{"content", Json::array({Json{{"type", "text"}, {"text", join_content(*result)}}})},
                     {"structuredContent", {{"status", result->status}}},
                     {"isError", result->status == 0 || result->status >= 400}});
    } else if (method == "ping") {
      reply(id, Json::object());
    } else {
      error(id, -32601, "method not found: " + method);
    }
  }
  return 0;
}

}  // namespace clawenv
