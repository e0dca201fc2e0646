#pragma once

// HTTP transport for ChatEndpoint: POST the request JSON to a URL, expect
// {"choices":[{"text": ...}]} back. Authorization uses a bearer token read
// from an environment variable.

#include <cstdlib>
#include <string>

#include <httplib.h>

#include "clickscale/gateway.hpp"

namespace clickscale {

struct HttpEndpointConfig {
  std::string url;  // http://host[:port]/path
  std::string token_env = "CLICKSCALE_API_TOKEN";
  int timeout_seconds = 60;
};

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path;
};

inline ParsedUrl split_url(const std::string& url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) throw ContractError("endpoint URL needs a scheme: " + url);
  const std::size_t slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

class HttpEndpoint final : public ChatEndpoint {
 public:
  explicit HttpEndpoint(HttpEndpointConfig cfg) : cfg_(std::move(cfg)), url_(split_url(cfg_.url)) {
    if (const char* tok = std::getenv(cfg_.token_env.c_str())) token_ = tok;
  }

  // A client per call: httplib::Client is not safe for concurrent use.
  ChatResponse complete(const ChatRequest& request) override {
    httplib::Client cli(url_.scheme_host_port);
    cli.set_connection_timeout(cfg_.timeout_seconds, 0);
    cli.set_read_timeout(cfg_.timeout_seconds, 0);
    cli.set_write_timeout(cfg_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    const std::string body = request_to_json(request).dump();
    auto res = cli.Post(url_.path, headers, body, "application/json");
    if (!res) {
      throw EndpointError("POST " + cfg_.url + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw EndpointError("POST " + cfg_.url + " returned HTTP " + std::to_string(res->status));
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
      throw EndpointError("endpoint reply is not JSON");
    }
    return response_from_json(j);
  }

 private:
  HttpEndpointConfig cfg_;
  ParsedUrl url_;
  std::string token_;
};

}  // namespace clickscale
