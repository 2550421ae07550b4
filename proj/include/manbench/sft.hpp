#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "manbench/defenses.hpp"

namespace manbench {

enum class SftKind { resilience, corrective, enriching };

std::string_view to_string(SftKind k);
SftKind sft_kind_from_string(std::string_view s);

struct SftRecord {
  SftKind kind = SftKind::resilience;
  std::string system;
  std::string prompt;
  std::string response;
  std::string question_id;
  std::map<std::string, std::string> metadata;

  // Kept for validation at emit time; not serialized.
  std::vector<Choice> choices;
  char answer_label = 0;
};

nlohmann::json to_json(const SftRecord& r);

// A record only when the defended outcome is correct and the report's own
// final answer is the ground truth.
std::optional<SftRecord> build_resilience_record(const ProtocolOutcome& defended, const Question& q);

// Corrective needs an incorrect baseline outcome, enriching a correct one
// (EligibilityError otherwise). The group context is a correct-guidance
// group of `group_size`; the ideal response is generated up to
// 1 + max_regenerations times until its final answer is the ground truth
// (ProtocolError when it never is).
SftRecord build_cooperative_record(SftKind kind, const Question& q,
                                   const ProtocolOutcome& baseline_outcome, Backend& narrator,
                                   const CompletionParams& params, int group_size = 5,
                                   int max_regenerations = 2);

struct SftRatio {
  int resilience = 1;
  int cooperative = 1;
};

SftRatio parse_sft_ratio(std::string_view s);  // "1:1"

struct SftSummary {
  std::size_t resilience_in = 0;
  std::size_t cooperative_in = 0;
  std::size_t resilience_out = 0;
  std::size_t corrective_out = 0;
  std::size_t enriching_out = 0;
  bool downsampled = false;
  std::size_t lines() const { return resilience_out + corrective_out + enriching_out; }
};

// Down-samples the larger side to the ratio, shuffles with `seed`, writes one
// JSON object per line. RatioUnsatisfiable when a side is empty; IoError on
// write failure; std::invalid_argument for a record whose response does not
// resolve to its ground truth.
SftSummary emit_sft_dataset(const std::vector<SftRecord>& records,
                            const std::filesystem::path& path, SftRatio ratio = {},
                            std::uint64_t seed = 0);

}  // namespace manbench
