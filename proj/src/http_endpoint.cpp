// SPDX-License-Identifier: Apache-2.0

#include <string>

#include "httplib.h"
#include "json.hpp"
#include "lstc/decoder.hpp"
#include "lstc/error.hpp"

namespace lstc {

namespace {

class HttpDecoder final : public DecoderEndpoint {
 public:
  explicit HttpDecoder(const HttpEndpointConfig& config) : config_(config) {
    const auto scheme_end = config.url.find("://");
    if (scheme_end == std::string::npos ||
        !(config.url.starts_with("http://") || config.url.starts_with("https://")))
      throw ConfigError("decoder endpoint must be an http(s) URL: '" + config.url + "'");
    const auto path_start = config.url.find('/', scheme_end + 3);
    origin_ = config.url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : config.url.substr(path_start);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (config.url.starts_with("https://"))
      throw ConfigError("this build has no TLS support; use an http:// endpoint");
#endif
  }

  std::string complete(const DecoderCall& call) override {
    httplib::Client client(origin_);
    const auto secs = config_.timeout.count() / 1000;
    const auto usecs = (config_.timeout.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace(config_.api_key_header, config_.api_key);
    const nlohmann::json body = {{"prompt", call.prompt}, {"max_chars", call.max_chars}};

    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw TransportError("POST " + config_.url + " failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
      throw TransportError("POST " + config_.url + " returned HTTP " + std::to_string(res->status));
    try {
      return nlohmann::json::parse(res->body).at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw TransportError("decoder reply is not {\"text\": str}: " + std::string(e.what()));
    }
  }

  std::string name() const override { return "http:" + config_.url; }

 private:
  HttpEndpointConfig config_;
  std::string origin_;
  std::string path_;
};

}  // namespace

std::unique_ptr<DecoderEndpoint> make_http_endpoint(const HttpEndpointConfig& config) {
  return std::make_unique<HttpDecoder>(config);
}

}  // namespace lstc
