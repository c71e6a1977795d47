// SPDX-License-Identifier: Apache-2.0
#include "clawenv/mock_server.hpp"

#include "clawenv/errors.hpp"

#include <httplib.h>

#include <algorithm>

#include <thread>

namespace clawenv {

struct ServiceHandle::Impl {
  httplib::Server server;
  std::thread thread;
};

ServiceHandle::ServiceHandle(std::shared_ptr<MockRuntime> runtime, const ServerOptions& opts)
    : runtime_(std::move(runtime)), impl_(std::make_unique<Impl>()), host_(opts.host) {
  auto handler = [rt = runtime_](const httplib::Request& req, httplib::Response& res) {
    std::string target = req.path;
    if (!req.params.empty()) {
      std::string q;
      for (const auto& [k, v] : req.params) q += (q.empty() ? "" : "&") + k + "=" + v;
      target += "?" + q;
    }
    MockResponse r = rt->handle(req.method, target, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto& srv = impl_->server;
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });
  const std::size_t threads = static_cast<std::size_t>(std::max(1, opts.threads));
  srv.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  srv.Get(".*", handler);
  srv.Post(".*", handler);
  srv.Put(".*", handler);
  srv.Delete(".*", handler);
  srv.Patch(".*", handler);

  if (opts.port == 0) {
    port_ = srv.bind_to_any_port(opts.host);
    if (port_ < 0) throw StartError("could not bind a free port on " + opts.host);
  } else {
    if (!srv.bind_to_port(opts.host, opts.port)) {
      throw StartError("port " + std::to_string(opts.port) + " on " + opts.host + " is busy");
    }
    port_ = opts.port;
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  srv.wait_until_ready();
}

ServiceHandle::~ServiceHandle() { stop(); }

std::string ServiceHandle::base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

void ServiceHandle::wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
}

void ServiceHandle::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::unique_ptr<ServiceHandle> start_services(const ServiceRegistry& registry, FixtureSet fixtures,
                                              ErrorInjectionPolicy policy, const ServerOptions& opts,
                                              std::vector<std::string> services, bool allow_net) {
  auto rt = std::make_shared<MockRuntime>(registry, std::move(fixtures), std::move(policy),
                                          std::move(services), allow_net);
  return std::make_unique<ServiceHandle>(std::move(rt), opts);
}

}  // namespace clawenv
