#include <httplib.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <thread>

#include "manbench/agents.hpp"
#include "manbench/error.hpp"

namespace manbench {

namespace {

using json = nlohmann::json;

// "https://host:port/v1" → {"https://host:port", "/v1"}
std::pair<std::string, std::string> split_base_url(const std::string& url) {
  std::size_t scheme_end = url.find("://");
  std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  std::size_t path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

}  // namespace

LiveConfig live_config_from_env(LiveConfig base) {
  if (base.base_url.empty()) {
    if (const char* v = std::getenv("MANBENCH_BASE_URL")) base.base_url = v;
  }
  if (base.api_key.empty()) {
    if (const char* v = std::getenv("MANBENCH_API_KEY")) base.api_key = v;
  }
  return base;
}

LiveBackend::LiveBackend(LiveConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty())
    throw ConfigError("live backend needs a base URL (config base_url or MANBENCH_BASE_URL)");
  if (config_.max_attempts < 1) config_.max_attempts = 1;
  std::tie(scheme_host_port_, path_prefix_) = split_base_url(config_.base_url);
}

json LiveBackend::request_body(std::span<const ChatTurn> messages, const CompletionParams& params) {
  json body;
  body["model"] = params.model;
  json msgs = json::array();
  for (const ChatTurn& t : messages)
    msgs.push_back({{"role", to_string(t.role)}, {"content", t.content}});
  body["messages"] = std::move(msgs);
  body["temperature"] = params.temperature;
  body["max_tokens"] = params.max_tokens;
  for (const auto& [k, v] : params.extra)
    if (!is_metadata_key(k)) body[k] = to_json(v);
  return body;
}

std::string LiveBackend::parse_response_body(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw BackendError(BackendError::Kind::malformed_response,
                       std::string("response is not JSON: ") + e.what());
  }
  try {
    const json& content = doc.at("choices").at(0).at("message").at("content");
    if (!content.is_string())
      throw BackendError(BackendError::Kind::malformed_response, "message content is not a string");
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw BackendError(BackendError::Kind::malformed_response,
                       std::string("response lacks choices[0].message.content: ") + e.what());
  }
}

std::string LiveBackend::post_once(const std::string& body) {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto res = client.Post(path_prefix_ + "/chat/completions", headers, body, "application/json");
  if (!res)
    throw BackendError(BackendError::Kind::transport,
                       "transport error: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    std::string snippet = res->body.substr(0, 300);
    throw BackendError(BackendError::Kind::http_status,
                       "HTTP " + std::to_string(res->status) + ": " + snippet, res->status);
  }
  return parse_response_body(res->body);
}

std::string LiveBackend::complete(std::span<const ChatTurn> messages, const CompletionParams& params) {
  if (messages.empty()) throw std::invalid_argument("complete() needs at least one message");
  validate(params);
  std::string body = request_body(messages, params).dump();
  auto delay = config_.backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return post_once(body);
    } catch (const BackendError& e) {
      if (!e.retryable() || attempt >= config_.max_attempts) throw;
      spdlog::warn("backend attempt {}/{} failed ({}); retrying in {} ms", attempt,
                   config_.max_attempts, e.what(), delay.count());
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
}

}  // namespace manbench
