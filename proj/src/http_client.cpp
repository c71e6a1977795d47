// SPDX-License-Identifier: Apache-2.0
#include "clawenv/http_client.hpp"

#include "clawenv/errors.hpp"
#include "clawenv/text.hpp"

#include <httplib.h>

#include <chrono>

namespace clawenv {

Json HttpResponse::json() const {
  auto parsed = Json::parse(body, nullptr, false);
  if (parsed.is_discarded()) return Json{{"raw", body}};
  return parsed;
}

std::pair<std::string, std::string> split_url(std::string_view url) {
  auto scheme = url.find("://");
  std::size_t host_start = scheme == std::string_view::npos ? 0 : scheme + 3;
  auto slash = url.find('/', host_start);
  if (slash == std::string_view::npos) {
    auto q = url.find('?', host_start);
    if (q == std::string_view::npos) return {std::string(url), "/"};
    return {std::string(url.substr(0, q)), "/" + std::string(url.substr(q))};
  }
  return {std::string(url.substr(0, slash)), std::string(url.substr(slash))};
}

bool is_loopback_url(std::string_view url) {
  auto [origin, _] = split_url(url);
  std::string_view host = origin;
  if (auto p = host.find("://"); p != std::string_view::npos) host.remove_prefix(p + 3);
  if (auto at = host.rfind('@'); at != std::string_view::npos) host.remove_prefix(at + 1);
  if (!host.empty() && host.front() == '[') {
    return host.substr(0, host.find(']') + 1) == "[::1]";
  }
  host = host.substr(0, host.find(':'));
  const std::string h = to_lower(host);
  return h == "localhost" || h.starts_with("127.");
}

void HttpClient::check_egress(std::string_view url) const {
  if (!policy_.allow_external && !is_loopback_url(url)) {
    throw EgressDenied("outbound request to " + std::string(url) + " refused: network egress disabled");
  }
}

namespace {

template <class Fn>
HttpResponse perform(const std::string& url, double timeout_s, Fn&& fn) {
  auto [origin, target] = split_url(url);
  HttpResponse out;
  try {
    httplib::Client cli(origin);
    const auto to = std::chrono::duration<double>(timeout_s > 0 ? timeout_s : 30.0);
    const auto us = std::chrono::duration_cast<std::chrono::microseconds>(to);
    cli.set_connection_timeout(us);
    cli.set_read_timeout(us);
    cli.set_write_timeout(us);
    cli.set_follow_location(true);
    auto res = fn(cli, target);
    if (!res) {
      out.error = httplib::to_string(res.error());
      out.timed_out = res.error() == httplib::Error::Read || res.error() == httplib::Error::ConnectionTimeout;
      return out;
    }
    out.status = res->status;
    out.body = res->body;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

httplib::Headers to_headers(const std::vector<std::pair<std::string, std::string>>& headers) {
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  return h;
}

}  // namespace

HttpResponse HttpClient::get(const std::string& url, double timeout_s,
                             const std::vector<std::pair<std::string, std::string>>& headers) const {
  check_egress(url);
  return perform(url, timeout_s, [&](httplib::Client& cli, const std::string& target) {
    return cli.Get(target, to_headers(headers));
  });
}

HttpResponse HttpClient::post(const std::string& url, const std::string& body, double timeout_s,
                              const std::vector<std::pair<std::string, std::string>>& headers) const {
  check_egress(url);
  return perform(url, timeout_s, [&](httplib::Client& cli, const std::string& target) {
    return cli.Post(target, to_headers(headers), body, "application/json");
  });
}

HttpResponse HttpClient::post_json(const std::string& url, const Json& body, double timeout_s) const {
  return post(url, body.dump(), timeout_s);
}

}  // namespace clawenv
