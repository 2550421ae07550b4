#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "manbench/agents.hpp"
#include "manbench/dataset.hpp"
#include "manbench/error.hpp"

namespace manbench {

// Policies decide replies from the prompt's shape and the question bank.
//   echo-baseline       subject always gives its baseline label
//   adopt-distractor    baseline label in isolation, the distractor otherwise
//   adopt-group-answer  baseline label in isolation, else whatever the group
//                       (or its recalled memory) asserted
// Every policy also plays narrator, curator and guidance writer, so a single
// scripted backend can drive a whole run.
enum class ScriptPolicy { none, echo_baseline, adopt_distractor, adopt_group_answer };

std::string_view to_string(ScriptPolicy p);
ScriptPolicy script_policy_from_string(std::string_view s);

struct ScriptRule {
  std::string match;  // substring of the last user turn; "" matches anything
  std::string response;
  // When set, the rule throws BackendError of this kind instead of replying.
  std::optional<BackendError::Kind> error;
  int status = 0;
};

struct Script {
  ScriptPolicy policy = ScriptPolicy::none;
  // Literal replies per agent tag ("subject", "Mary", ... or "*"). Consumed
  // front to back; single-consumer only.
  std::map<std::string, std::deque<std::string>> queues;
  std::vector<ScriptRule> rules;
  // Baseline label per question id; defaults to the ground truth.
  std::map<std::string, char> baseline;
};

Script script_from_json(const nlohmann::json& doc);
Script load_script(const std::filesystem::path& path);
Script policy_script(ScriptPolicy policy);

class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(Script script, std::vector<Question> bank = {});

  std::string complete(std::span<const ChatTurn> messages, const CompletionParams& params) override;
  std::string id() const override;

 private:
  std::optional<std::string> from_queue(const std::string& agent);
  std::optional<std::string> from_policy(std::span<const ChatTurn> messages) const;
  const Question* identify(std::string_view prompt) const;
  char baseline_label(const Question& q) const;

  Script script_;
  std::vector<Question> bank_;
  mutable std::mutex queue_mutex_;
};

}  // namespace manbench
