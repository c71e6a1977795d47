// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "clawenv/mock_runtime.hpp"

#include <memory>
#include <string>

namespace clawenv {

inline constexpr int kDefaultPort = 9100;

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = kDefaultPort;  // 0 picks a free port
  int threads = 64;         // concurrent connections served
};

/// One local HTTP listener serving every mounted service under /{service}/...
class ServiceHandle {
public:
  /// Throws StartError when the port cannot be bound.
  ServiceHandle(std::shared_ptr<MockRuntime> runtime, const ServerOptions& opts);
  ~ServiceHandle();
  ServiceHandle(const ServiceHandle&) = delete;
  ServiceHandle& operator=(const ServiceHandle&) = delete;

  int port() const { return port_; }
  std::string base_url() const;
  MockRuntime& runtime() { return *runtime_; }
  std::shared_ptr<MockRuntime> shared_runtime() const { return runtime_; }

  /// Blocks until stop() is called from another thread (or a signal handler path).
  void wait();
  void stop();

private:
  struct Impl;
  std::shared_ptr<MockRuntime> runtime_;
  std::unique_ptr<Impl> impl_;
  std::string host_;
  int port_ = 0;
};

std::unique_ptr<ServiceHandle> start_services(const ServiceRegistry& registry, FixtureSet fixtures,
                                              ErrorInjectionPolicy policy, const ServerOptions& opts = {},
                                              std::vector<std::string> services = {}, bool allow_net = false);

}  // namespace clawenv
