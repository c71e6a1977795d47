// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "clawenv/http_client.hpp"
#include "clawenv/mock_server.hpp"
#include "clawenv/run_result.hpp"
#include "clawenv/task_model.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace clawenv {

struct SandboxConfig {
  bool network_egress = false;  // only for live-web tasks
  double timeout_s = 300.0;
  double time_scale = 1.0;
  std::filesystem::path root;  // empty = fresh temp dir
  bool keep = false;           // leave the directory behind on teardown
  int port = 0;                // 0 = ephemeral
  double health_interval_s = 0.5;
  double health_budget_s = 10.0;
};

/// Answers whether a service endpoint is up. The default does GET <url> and wants a 2xx.
using HealthProbe = std::function<bool(const std::string& url)>;

/// Polls every url until all answer, every interval_s, for at most budget_s. Throws SandboxError.
void wait_healthy(const std::vector<std::string>& urls, double interval_s, double budget_s,
                  const HealthProbe& probe = {});

/// Process-level isolation: a private directory holding the read-only task document, the
/// materialized workspace and the harness files; the task's services on a loopback port; an
/// egress policy that refuses non-loopback traffic unless network_egress is set.
class Sandbox {
public:
  Sandbox(const TaskConfig& cfg, const ServiceRegistry& registry, ErrorInjectionPolicy policy,
          SandboxConfig config = {}, HealthProbe probe = {});
  ~Sandbox();
  Sandbox(const Sandbox&) = delete;
  Sandbox& operator=(const Sandbox&) = delete;

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path workspace() const { return root_ / "workspace"; }
  std::filesystem::path task_file() const { return root_ / "task.yaml"; }
  std::filesystem::path harness_dir() const { return root_ / "harness"; }
  const SandboxConfig& config() const { return config_; }

  /// http://127.0.0.1:<port>, or empty when the task mounts no services.
  std::string services_endpoint() const;
  EgressPolicy egress() const { return EgressPolicy{config_.network_egress}; }
  ServiceHandle* services() { return services_.get(); }

  WorkspaceSnapshot snapshot_workspace() const;

  /// Stops the services and removes the directory (unless keep).
  void teardown();

private:
  SandboxConfig config_;
  std::filesystem::path root_;
  std::unique_ptr<ServiceHandle> services_;
  bool torn_down_ = false;
};

/// argv for running an agent command in a container matching the process sandbox: no network,
/// task document mounted read-only, workspace mounted at /workspace.
std::vector<std::string> container_command(const Sandbox& sandbox, const std::string& image,
                                           const std::vector<std::string>& agent_command,
                                           const std::string& engine = "docker");

}  // namespace clawenv
