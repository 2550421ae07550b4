#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace manbench {

class Backend;
struct CompletionParams;

enum class Domain {
  HistoryTimeEvents,
  MisconceptionsSocialCognition,
  GeneralKnowledge,
  DomainSpecificKnowledge,
};

std::string_view to_string(Domain d);
Domain domain_from_string(std::string_view s);

struct Choice {
  char label = 'A';
  std::string text;

  bool operator==(const Choice&) const = default;
};

struct Question {
  std::string id;
  std::string task;
  Domain domain = Domain::GeneralKnowledge;
  std::string text;
  std::vector<Choice> choices;
  char answer_label = 'A';
  std::optional<char> distractor_label;

  const Choice* find(char label) const;
  const Choice& answer() const;
  bool has_label(char label) const { return find(label) != nullptr; }

  bool operator==(const Question&) const = default;
};

// Throws SchemaError naming the offending field.
void validate(const Question& q);

struct TaskManifest {
  std::string task_name;
  Domain domain;
  std::string expert_role;
  std::size_t question_count;
};

// The twenty supported tasks with their domain, expert role and the
// post-subsampling question counts of the reference corpus.
std::span<const TaskManifest> supported_tasks();
const TaskManifest& task_manifest(std::string_view task_name);
Domain classify_domain(std::string_view task_name);

std::vector<Question> parse_task(const nlohmann::json& doc);
std::vector<Question> load_task(const std::filesystem::path& path);

nlohmann::json task_to_json(std::span<const Question> questions);
void save_task(const std::filesystem::path& path, std::span<const Question> questions);

// "data/misconceptions.json" → "data/misconceptions.curated.json"
std::filesystem::path curated_path(const std::filesystem::path& source);

// Seeded uniform sample without replacement; survivors keep input order.
std::vector<Question> subsample(std::span<const Question> questions, std::size_t cap,
                                std::uint64_t seed);

// BIG-bench task JSON ("examples" with "input" and "target_scores") to
// Questions. Examples with fewer than two options or no unique positive
// target are skipped.
std::vector<Question> convert_bigbench(const nlohmann::json& doc, const std::string& task_name);

std::string distractor_prompt(const Question& q);

// Label named by a "Selected Primary Distractor:" line, if it resolves to an
// incorrect option.
std::optional<char> parse_selected_distractor(const std::string& response, const Question& q);

// Asks the backend for the most plausible incorrect option. After
// `max_retries` failed parses the fallback picks the incorrect option
// closest in normalized edit distance to the last response; with
// `allow_fallback` false it throws DistractorUnresolved instead.
char select_distractor(const Question& q, Backend& backend, const CompletionParams& params,
                       int max_retries = 2, bool allow_fallback = true);

}  // namespace manbench
