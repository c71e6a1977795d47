// SPDX-License-Identifier: Apache-2.0
#include "clawenv/sandbox.hpp"

#include "clawenv/errors.hpp"
#include "clawenv/process.hpp"

#include <fstream>
#include <thread>

namespace clawenv {

namespace fs = std::filesystem;

void wait_healthy(const std::vector<std::string>& urls, double interval_s, double budget_s, const HealthProbe& probe) {
  HealthProbe check = probe;
  if (!check) {
    check = [](const std::string& url) {
      HttpClient client;
      auto res = client.get(url, 2.0);
      return res.status >= 200 && res.status < 300;
    };
  }
  const auto start = Clock::now();
  std::vector<bool> up(urls.size(), false);
  while (true) {
    bool all = true;
    for (std::size_t i = 0; i < urls.size(); ++i) {
      if (!up[i]) up[i] = check(urls[i]);
      all = all && up[i];
    }
    if (all) return;
    const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    if (elapsed + interval_s > budget_s) {
      std::string down;
      for (std::size_t i = 0; i < urls.size(); ++i) {
        if (!up[i]) down += (down.empty() ? "" : ", ") + urls[i];
      }
      throw SandboxError("services not healthy after " + std::to_string(budget_s) + "s: " + down);
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(interval_s));
  }
}

Sandbox::Sandbox(const TaskConfig& cfg, const ServiceRegistry& registry, ErrorInjectionPolicy policy,
                 SandboxConfig config, HealthProbe probe)
    : config_(std::move(config)) {
  if (config_.root.empty()) {
    TempDir tmp("clawenv-run");
    root_ = tmp.release();
  } else {
    root_ = config_.root;
    fs::create_directories(root_);
  }
  try {
    fs::create_directories(workspace());
    fs::create_directories(harness_dir());
    {
      std::ofstream out(task_file(), std::ios::binary);
      out << serialize_task_yaml(cfg);
    }
    fs::permissions(task_file(), fs::perms::owner_read | fs::perms::group_read | fs::perms::others_read);

    for (const auto& f : cfg.files) {
      if (!f.path.starts_with(kWorkspacePrefix)) throw SandboxError("file outside /workspace/: " + f.path);
      const fs::path target = workspace() / f.path.substr(kWorkspacePrefix.size());
      fs::create_directories(target.parent_path());
      std::ofstream out(target, std::ios::binary);
      if (!out) throw SandboxError("cannot write " + target.string());
      out << materialize_file(f);
    }

    if (!cfg.services.empty()) {
      policy.time_scale = config_.time_scale;
      ServerOptions opts;
      opts.port = config_.port;
      try {
        services_ = start_services(registry, cfg.fixtures, policy, opts, cfg.services, config_.network_egress);
      } catch (const StartError& e) {
        throw SandboxError(std::string("mock services failed to start: ") + e.what());
      }
      std::vector<std::string> urls;
      for (const auto& s : cfg.services) urls.push_back(services_endpoint() + "/" + s + "/audit");
      wait_healthy(urls, config_.health_interval_s * config_.time_scale,
                   config_.health_budget_s * config_.time_scale, probe);
    }
  } catch (...) {
    teardown();
    throw;
  }
}

Sandbox::~Sandbox() {
  try {
    teardown();
  } catch (...) {
  }
}

std::string Sandbox::services_endpoint() const { return services_ ? services_->base_url() : std::string{}; }

WorkspaceSnapshot Sandbox::snapshot_workspace() const {
  WorkspaceSnapshot snap;
  const fs::path ws = workspace();
  if (!fs::exists(ws)) return snap;
  for (const auto& e : fs::recursive_directory_iterator(ws)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    snap[std::string(kWorkspacePrefix) + fs::relative(e.path(), ws).generic_string()] =
        std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return snap;
}

void Sandbox::teardown() {
  if (torn_down_) return;
  torn_down_ = true;
  if (services_) {
    services_->stop();
    services_.reset();
  }
  if (!config_.keep && !root_.empty()) {
    std::error_code ec;
    fs::permissions(root_, fs::perms::owner_all, fs::perm_options::add, ec);
    fs::remove_all(root_, ec);
  }
}

std::vector<std::string> container_command(const Sandbox& sandbox, const std::string& image,
                                           const std::vector<std::string>& agent_command, const std::string& engine) {
  std::vector<std::string> argv{engine, "run", "--rm"};
  if (!sandbox.config().network_egress) {
    argv.insert(argv.end(), {"--network", "none"});
  }
  argv.insert(argv.end(), {"-v", sandbox.task_file().string() + ":/opt/clawenvkit/task.yaml:ro", "-v",
                           sandbox.workspace().string() + ":/workspace", "-w", "/workspace"});
  if (!sandbox.services_endpoint().empty()) {
    argv.insert(argv.end(), {"-e", "CLAWENV_API=" + sandbox.services_endpoint()});
  }
  argv.push_back(image);
  argv.insert(argv.end(), agent_command.begin(), agent_command.end());
  return argv;
}

}  // namespace clawenv
