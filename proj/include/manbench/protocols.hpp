#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "manbench/agents.hpp"
#include "manbench/dataset.hpp"
#include "manbench/roles.hpp"

namespace manbench {

enum class Protocol { B, GS, GL, RS, RL, C };

inline constexpr Protocol kAllProtocols[] = {Protocol::B,  Protocol::GS, Protocol::GL,
                                             Protocol::RS, Protocol::RL, Protocol::C};
inline constexpr Protocol kInfluenceProtocols[] = {Protocol::GS, Protocol::GL, Protocol::RS,
                                                   Protocol::RL};

std::string_view to_string(Protocol p);
Protocol protocol_from_string(std::string_view s);
bool is_long_term(Protocol p);
bool uses_group(Protocol p);

enum class Defense { none, anchoring, scrutiny };

std::string_view to_string(Defense d);
Defense defense_from_string(std::string_view s);

struct ProtocolOutcome {
  std::string question_id;
  Protocol protocol = Protocol::B;
  int group_size = 0;  // 0 for B
  Defense defense = Defense::none;

  // Narrator turns in speaking order, attributed by speaker_name.
  std::vector<ChatTurn> group_turns;
  // Every message sent to and received from the subject, in order.
  std::vector<ChatTurn> subject_turns;

  std::optional<std::string> memory;               // GL / RL only
  std::optional<std::string> intermediate_answer;  // GL / RL consolidation reply
  std::string raw_answer;
  std::optional<char> parsed_label;
  bool correct = false;
  bool parse_failed = true;
  bool distractor_adopted = false;
  bool reprompted = false;

  // Group turns followed by subject turns.
  std::vector<ChatTurn> transcript() const;
};

nlohmann::json to_json(const ProtocolOutcome& o);
ProtocolOutcome outcome_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ChatTurn& t);
ChatTurn chat_turn_from_json(const nlohmann::json& j);

// Extraction cascade: (1) "The best answer is: "(X)" with any quote style,
// (2) the first standalone "(X)" naming a valid label, (3) a unique
// normalized match of an option's full text.
std::optional<char> parse_answer(std::string_view text, std::span<const Choice> choices);

// Text after the first line starting "Memory:", trimmed; "" when absent.
std::string consolidate_memory(std::string_view response);

struct ProtocolParams {
  CompletionParams subject;
  CompletionParams narrator;
};

ChatTurn generate_generic_turn(const AgentIdentity& who, const Question& q, char distractor,
                               Backend& narrator, const CompletionParams& params);

// Throws ProtocolOrderError when E is given history or D/G/A/Q are not.
ChatTurn generate_role_turn(Archetype role, const AgentIdentity& who, const Question& q,
                            char distractor, std::span<const ChatTurn> history, Backend& narrator,
                            const CompletionParams& params);

ChatTurn generate_guidance_turn(const AgentIdentity& who, const Question& q,
                                std::span<const ChatTurn> history, Backend& narrator,
                                const CompletionParams& params);

// Influence phase of a group protocol: GS/GL generic turns, RS/RL role turns,
// C correct-guidance turns. Empty for B.
std::vector<ChatTurn> generate_group_turns(Protocol p, const Question& q, int group_size,
                                           Backend& narrator, const CompletionParams& params);

// Replaces how the subject is queried after the influence phase. For
// short-term protocols `wrap` builds the final query; for long-term ones it
// builds the consolidation query and `memory` extracts what is carried into
// the standard re-query.
struct SubjectStage {
  Defense defense = Defense::none;
  std::function<std::vector<ChatTurn>(const Question&, std::span<const ChatTurn>)> wrap;
  std::function<std::optional<char>(const std::string&, const Question&)> label;
  std::function<std::string(const std::string&)> memory;
  std::string reminder;
};

ProtocolOutcome run_protocol(Protocol protocol, const Question& q, int group_size,
                             Backend& subject, Backend& narrator, const ProtocolParams& params,
                             const SubjectStage* stage = nullptr);

// Same as run_protocol, with group turns supplied by the caller.
ProtocolOutcome run_protocol_with_turns(Protocol protocol, const Question& q, int group_size,
                                        std::vector<ChatTurn> group_turns, Backend& subject,
                                        const ProtocolParams& params,
                                        const SubjectStage* stage = nullptr);

}  // namespace manbench
