#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "manbench/protocols.hpp"

namespace manbench {

// Single user turn holding the anchoring / scrutiny prompt. History must be
// non-empty (std::invalid_argument otherwise).
std::vector<ChatTurn> wrap_cognitive_anchoring(const Question& q, std::span<const ChatTurn> history);
std::vector<ChatTurn> wrap_source_scrutiny(const Question& q, std::span<const ChatTurn> history);

struct DefenseReport {
  std::string initial_answer;
  std::vector<std::pair<std::string, std::string>> middle_fields;
  std::string final_rationale;
  std::string final_answer;
  std::optional<char> final_answer_label;
  std::optional<int> credibility;  // scrutiny only
  bool degraded = false;           // some mandated field was missing

  const std::string& field(std::string_view name) const;
};

// Field names the defense mandates, in output order.
std::vector<std::string> defense_fields(Defense d);

// Never throws. Each field is the text after "<Name>:" up to the next
// mandated field, trimmed, with one pair of surrounding brackets removed.
DefenseReport parse_defense_report(std::string_view text, std::span<const Choice> choices,
                                   Defense defense);

// First integer in 1..10 of a credibility assessment; "N/10" wins over a
// bare number.
std::optional<int> credibility_score(std::string_view s);

// Label of the "Final Answer:" line, falling back to the whole text when no
// such line exists.
std::optional<char> final_answer_label(std::string_view text, std::span<const Choice> choices);

SubjectStage defense_stage(Defense defense);

// Influence phase as run_protocol; only the subject's query is wrapped. For
// GL/RL the wrapper replaces the consolidation query and the re-query stays
// standard. Defense::none is the plain protocol.
ProtocolOutcome run_defended_protocol(Defense defense, Protocol protocol, const Question& q,
                                      int group_size, Backend& subject, Backend& narrator,
                                      const ProtocolParams& params);

ProtocolOutcome run_defended_protocol_with_turns(Defense defense, Protocol protocol,
                                                 const Question& q, int group_size,
                                                 std::vector<ChatTurn> group_turns,
                                                 Backend& subject, const ProtocolParams& params);

}  // namespace manbench
