// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "clawenv/http_client.hpp"
#include "clawenv/llm_client.hpp"
#include "clawenv/run_result.hpp"
#include "clawenv/service_registry.hpp"
#include "clawenv/task_model.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace clawenv {

enum class HarnessTier { native_plugin, mcp_stdio, skill_document };

std::string_view to_string(HarnessTier t);
/// Accepts the enum names, "native"/"mcp"/"skill", or "1"/"2"/"3". Throws std::invalid_argument.
HarnessTier harness_tier_from_string(std::string_view s);

struct ToolDescriptor {
  std::string name;
  std::string service;
  std::string endpoint;
  std::string url;
  std::string description;
  Json input_schema;
};

/// JSON schema for a tool's arguments, from the registry endpoint (preferred) or the tool's params.
Json input_schema_for(const Tool& tool, const EndpointSpec* endpoint);

std::vector<ToolDescriptor> tool_descriptors(const TaskConfig& cfg, const ServiceRegistry& registry,
                                             const std::string& services_endpoint);

struct HarnessArtifacts {
  HarnessTier tier = HarnessTier::native_plugin;
  std::string prompt;  // what the agent is given
  std::vector<ToolDescriptor> tools;
  std::string services_endpoint;
  std::filesystem::path dir;                 // where artifacts were written
  std::vector<std::filesystem::path> files;  // tools.json, .mcp.json, SKILL.md
  Json config = Json::object();              // the manifest / MCP config written to disk
  std::filesystem::path workspace_root;      // host directory backing /workspace/
  bool workspace_tools = false;
  std::vector<std::string> mcp_command;  // server command for mcp_stdio
};

/// native_plugin: tools.json registration manifest. mcp_stdio: mcp_manifest.json for the stdio
/// server plus .mcp.json pointing at it. skill_document: SKILL.md with one curl example per
/// tool, appended to the prompt. A task without tools or files gets no artifacts.
HarnessArtifacts prepare_harness(HarnessTier tier, const TaskConfig& cfg, const ServiceRegistry& registry,
                                 const std::string& services_endpoint, const std::filesystem::path& dir,
                                 const std::filesystem::path& workspace_root = {},
                                 const std::vector<std::string>& mcp_command = {});

std::string skill_document(const std::vector<ToolDescriptor>& tools, const std::string& services_endpoint);

/// Executes the agent's tool calls for one tier.
class ToolExecutor {
public:
  virtual ~ToolExecutor() = default;
  virtual std::vector<ToolDefinition> definitions() = 0;
  virtual ToolResult execute(const ToolCall& call) = 0;
};

std::unique_ptr<ToolExecutor> make_executor(const HarnessArtifacts& artifacts, EgressPolicy egress);

// --- building blocks shared by the executors and the MCP server ---

ToolResult call_endpoint(const HttpClient& client, const std::string& url, const Json& args, const ToolCall& call);

std::vector<ToolDefinition> workspace_tool_definitions();

/// read_file / write_file / list_files against `root` (the host directory behind /workspace/).
/// nullopt when the call is not a workspace tool.
std::optional<ToolResult> call_workspace_tool(const std::filesystem::path& root, const ToolCall& call);

/// POSIX-ish word splitting with single/double quotes and backslash escapes.
/// `vars` expands $NAME and ${NAME} outside single quotes. Throws std::invalid_argument.
std::vector<std::string> shell_split(const std::string& command, const std::map<std::string, std::string>& vars = {});

struct CurlRequest {
  std::string method;
  std::string url;
  std::string body;
};

/// Understands curl [-s] [-S] [-f] [-X M] [-H h] [-d|--data|--data-raw|--json body] URL.
/// Throws std::invalid_argument for anything else.
CurlRequest parse_curl(const std::vector<std::string>& words);

/// Line-delimited JSON-RPC MCP server over the given streams. Manifest:
/// {"services_endpoint": ..., "workspace_root": ..., "tools": [{name, description, url, inputSchema}]}
int run_mcp_server(std::istream& in, std::ostream& out, const Json& manifest);

}  // namespace clawenv
