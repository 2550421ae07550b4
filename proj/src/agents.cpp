#include "manbench/agents.hpp"

#include <array>
#include <stdexcept>

#include "manbench/dataset.hpp"
#include "manbench/text.hpp"

namespace manbench {

namespace {

using json = nlohmann::json;

constexpr std::array<std::string_view, 15> kNames = {
    "Mary",    "John",  "George", "Tom",   "Tony",    "Jack", "Alice", "Bob",
    "Charlie", "David", "Emma",   "Frank", "Sarah",   "Michael", "Lisa",
};

}  // namespace

std::string_view to_string(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

Role role_from_string(std::string_view s) {
  if (s == "system") return Role::system;
  if (s == "user") return Role::user;
  if (s == "assistant") return Role::assistant;
  throw std::invalid_argument("unknown chat role: " + std::string(s));
}

void validate(const CompletionParams& params) {
  if (params.temperature < 0.0 || params.temperature > 2.0)
    throw std::invalid_argument("temperature must lie in [0, 2]");
  if (params.max_tokens < 1) throw std::invalid_argument("max_tokens must be positive");
}

bool is_metadata_key(std::string_view key) { return key.substr(0, 2) == "x-"; }

json to_json(const ParamValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

std::string canonical_request(std::span<const ChatTurn> messages, const CompletionParams& params) {
  json doc;
  json msgs = json::array();
  for (const ChatTurn& t : messages)
    msgs.push_back({{"role", to_string(t.role)}, {"content", t.content}});
  doc["messages"] = std::move(msgs);
  doc["model"] = params.model;
  doc["temperature"] = params.temperature;
  doc["max_tokens"] = params.max_tokens;
  json extra = json::object();
  for (const auto& [k, v] : params.extra)
    if (!is_metadata_key(k)) extra[k] = to_json(v);
  doc["extra"] = std::move(extra);
  // json objects are key-sorted, so dump() is canonical.
  return doc.dump();
}

std::string cache_key(std::span<const ChatTurn> messages, const CompletionParams& params) {
  return text::sha256_hex(canonical_request(messages, params));
}

std::span<const std::string_view> agent_name_pool() { return kNames; }

std::string agent_name(std::size_t index) {
  std::string base(kNames[index % kNames.size()]);
  std::size_t cycle = index / kNames.size() + 1;
  if (cycle == 1) return base;
  return base + "-" + std::to_string(cycle);
}

std::vector<AgentIdentity> assign_identities(int n, std::string_view task_name) {
  if (n < 1) throw std::invalid_argument("need at least one agent");
  const TaskManifest& task = task_manifest(task_name);
  std::vector<AgentIdentity> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back({agent_name(static_cast<std::size_t>(i)), task.expert_role});
  return out;
}

CachingBackend::CachingBackend(Backend& inner, ResponseCache cache)
    : inner_(inner), cache_(std::move(cache)) {}

std::string CachingBackend::complete(std::span<const ChatTurn> messages,
                                     const CompletionParams& params) {
  std::string key = cache_key(messages, params);
  if (auto hit = cache_.get(key)) {
    ++hits_;
    return *hit;
  }
  ++misses_;
  std::string response = inner_.complete(messages, params);
  cache_.put(key, response, params.model);
  return response;
}

}  // namespace manbench
