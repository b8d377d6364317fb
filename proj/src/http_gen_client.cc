#include "sqlgrade/http_gen_client.h"

#include <cstdlib>
#include <stdexcept>

#include <httplib.h>
#include <json.hpp>

namespace sqlgrade {
namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

}  // namespace

HttpGenConfig HttpGenConfig::from_env() {
  HttpGenConfig c;
  c.base_url = env_or("SQLGRADE_GEN_URL", "");
  if (c.base_url.empty()) throw std::runtime_error("SQLGRADE_GEN_URL is not set");
  c.token = env_or("SQLGRADE_GEN_TOKEN", "");
  const auto timeout = env_or("SQLGRADE_GEN_TIMEOUT", "");
  if (!timeout.empty()) {
    try {
      c.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(std::stod(timeout) * 1000.0));
    } catch (const std::exception&) {
      throw std::runtime_error("SQLGRADE_GEN_TIMEOUT must be a number of seconds");
    }
  }
  return c;
}

HttpGenClient::HttpGenClient(HttpGenConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("generation URL needs a scheme: " + config_.base_url);
  const auto path_start = config_.base_url.find('/', scheme_end + 3);
  origin_ = config_.base_url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
}

GenResult HttpGenClient::generate(const GenRequest& request) {
  nlohmann::json body = {
      {"model", request.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", request.temperature},
      {"max_tokens", request.max_tokens},
  };
  if (request.seed) body["seed"] = *request.seed;

  // One client per call: connections are never shared between threads.
  httplib::Client client(origin_);
  const auto secs = config_.timeout.count() / 1000;
  const auto usecs = (config_.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!config_.token.empty()) headers.emplace("Authorization", "Bearer " + config_.token);

  const auto res = client.Post(path_ + "/chat/completions", headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    const auto kind = err == httplib::Error::Read || err == httplib::Error::Write ? GenErrorKind::kTimeout
                                                                                  : GenErrorKind::kTransport;
    return GenResult::failure(kind, "request failed: " + httplib::to_string(err));
  }
  if (res->status == 429 || res->status >= 500) {
    return GenResult::failure(GenErrorKind::kTransport, "HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    return GenResult::failure(GenErrorKind::kModel, "HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  try {
    const auto reply = nlohmann::json::parse(res->body);
    const auto& content = reply.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) return GenResult::failure(GenErrorKind::kModel, "reply content is not a string");
    return GenResult::success(content.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    return GenResult::failure(GenErrorKind::kModel, std::string("malformed reply: ") + e.what());
  }
}

}  // namespace sqlgrade
