#pragma once

#include <span>
#include <string>

#include "manbench/agents.hpp"
#include "manbench/dataset.hpp"
#include "manbench/roles.hpp"

// Prompt builders. Every function here is pure and byte-deterministic; the
// golden files under tests/golden pin their output.
namespace manbench::prompts {

// "(B) three"
std::string render_option(const Question& q, char label);

// "(A) none  (B) three  (C) four  (D) two"
std::string render_choices(const Question& q);

// "Name: content" blocks separated by blank lines. Turns without a speaker
// name render as "Agent".
std::string render_history(std::span<const ChatTurn> turns);

// Canonical answer line for a label, as the subject is asked to produce it.
std::string canonical_answer(const Question& q, char label);

std::string baseline(const Question& q);

// Short-term Q&A context shared by GS, RS and C.
std::string group_context(const Question& q, std::span<const ChatTurn> group_turns);

std::string generic_generation(const AgentIdentity& who, const Question& q, char target);

std::string role_generation(Archetype role, const AgentIdentity& who, const Question& q,
                            char target, std::span<const ChatTurn> history);

std::string memory_system();

// Long-term consolidation stage: the group context with the Answer/Memory
// output format in place of the answer line.
std::string memory_acquisition(const Question& q, std::span<const ChatTurn> group_turns);

std::string memory_requery(const Question& q, const std::string& memory);

std::string correct_guidance(const AgentIdentity& who, const Question& q,
                             std::span<const ChatTurn> history);

std::string corrective_guidance(const AgentIdentity& who, const Question& q,
                                const std::string& initial_incorrect,
                                std::span<const ChatTurn> history);

std::string enriching_guidance(const AgentIdentity& who, const Question& q,
                               std::span<const ChatTurn> history);

std::string cognitive_anchoring(const Question& q, std::span<const ChatTurn> history);

std::string source_scrutiny(const Question& q, std::span<const ChatTurn> history);

std::string distractor_selection(const Question& q);

// Follow-ups sent once when a reply cannot be parsed.
std::string answer_format_reminder();
std::string memory_format_reminder();
std::string report_format_reminder();
std::string distractor_format_reminder();

}  // namespace manbench::prompts
