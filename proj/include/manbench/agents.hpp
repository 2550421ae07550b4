#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace manbench {

enum class Role { system, user, assistant };

std::string_view to_string(Role r);
Role role_from_string(std::string_view s);

struct ChatTurn {
  Role role = Role::user;
  std::string content;
  // Display name for transcript rendering; never part of a request's identity.
  std::optional<std::string> speaker_name;

  bool operator==(const ChatTurn&) const = default;
};

using ParamValue = std::variant<bool, std::int64_t, double, std::string>;

// Keys in `extra` starting with "x-" are harness metadata: they are neither
// sent on the wire nor part of the cache key. Everything else is forwarded.
struct CompletionParams {
  std::string model;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::map<std::string, ParamValue> extra;
};

inline constexpr std::string_view kAgentTag = "x-agent";

void validate(const CompletionParams& params);
bool is_metadata_key(std::string_view key);
nlohmann::json to_json(const ParamValue& v);

class Backend {
 public:
  virtual ~Backend() = default;

  // Returns the assistant message content verbatim. Implementations must be
  // callable from several threads at once and must not modify `messages`.
  virtual std::string complete(std::span<const ChatTurn> messages,
                               const CompletionParams& params) = 0;

  // Short identifier recorded in the ledger ("live:gpt-4o-mini", "scripted:...").
  virtual std::string id() const = 0;
};

// SHA-256 over a canonical JSON form of roles, contents, model, temperature,
// max_tokens and forwarded extras.
std::string cache_key(std::span<const ChatTurn> messages, const CompletionParams& params);

// Canonical form hashed by cache_key; exposed for inspection.
std::string canonical_request(std::span<const ChatTurn> messages, const CompletionParams& params);

struct AgentIdentity {
  std::string name;
  std::string expert_role;

  bool operator==(const AgentIdentity&) const = default;
};

std::span<const std::string_view> agent_name_pool();

// Name for the i-th agent (0-based); past the pool the names cycle with a
// numeric suffix: Mary, ..., Lisa, Mary-2, John-2, ...
std::string agent_name(std::size_t index);

std::vector<AgentIdentity> assign_identities(int n, std::string_view task_name);

// --- live OpenAI-compatible backend ---------------------------------------

struct LiveConfig {
  std::string base_url;  // e.g. "https://api.openai.com/v1"
  std::string api_key;
  int max_attempts = 3;
  std::chrono::milliseconds backoff{1000};
  std::chrono::seconds timeout{120};
};

// Fills base_url and api_key from MANBENCH_BASE_URL / MANBENCH_API_KEY when
// not already set.
LiveConfig live_config_from_env(LiveConfig base = {});

class LiveBackend : public Backend {
 public:
  explicit LiveBackend(LiveConfig config);

  std::string complete(std::span<const ChatTurn> messages, const CompletionParams& params) override;
  std::string id() const override { return "live:" + config_.base_url; }

  // Request body for one call; exposed for wire-format tests.
  static nlohmann::json request_body(std::span<const ChatTurn> messages,
                                     const CompletionParams& params);
  // Reads choices[0].message.content; throws BackendError{malformed_response}.
  static std::string parse_response_body(const std::string& body);

 private:
  std::string post_once(const std::string& body);

  LiveConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

// --- response cache ------------------------------------------------------

// One JSON file per key: {"response", "model", "timestamp"}. Writes go to a
// temp file and are renamed into place.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& response, const std::string& model) const;

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path path_for(const std::string& key) const;

  std::filesystem::path dir_;
};

class CachingBackend : public Backend {
 public:
  CachingBackend(Backend& inner, ResponseCache cache);

  std::string complete(std::span<const ChatTurn> messages, const CompletionParams& params) override;
  std::string id() const override { return inner_.id(); }

  std::uint64_t hits() const { return hits_.load(); }
  std::uint64_t misses() const { return misses_.load(); }

 private:
  Backend& inner_;
  ResponseCache cache_;
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
};

}  // namespace manbench
