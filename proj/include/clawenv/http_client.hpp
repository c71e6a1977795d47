// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "clawenv/json.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace clawenv {

/// Outbound network rule for sandboxed clients: loopback only unless egress is allowed.
struct EgressPolicy {
  bool allow_external = false;
};

struct HttpResponse {
  int status = 0;  // 0 on transport failure
  std::string body;
  std::string error;  // transport error text, empty on success
  bool timed_out = false;

  Json json() const;  // parsed body, or {"raw": body} when not JSON
};

/// Splits "http://host:port/path?q" into origin ("http://host:port") and target ("/path?q").
std::pair<std::string, std::string> split_url(std::string_view url);

bool is_loopback_url(std::string_view url);

class HttpClient {
public:
  explicit HttpClient(EgressPolicy policy = {}) : policy_(policy) {}

  /// Throws EgressDenied for non-loopback hosts when egress is off.
  HttpResponse get(const std::string& url, double timeout_s = 30.0,
                   const std::vector<std::pair<std::string, std::string>>& headers = {}) const;
  HttpResponse post(const std::string& url, const std::string& body, double timeout_s = 30.0,
                    const std::vector<std::pair<std::string, std::string>>& headers = {}) const;
  HttpResponse post_json(const std::string& url, const Json& body, double timeout_s = 30.0) const;

private:
  void check_egress(std::string_view url) const;

  EgressPolicy policy_;
};

}  // namespace clawenv
