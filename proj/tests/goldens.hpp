#pragma once

#include <string>
#include <utility>
#include <vector>

#include "manbench/prompts.hpp"
#include "support.hpp"

namespace fixture {

// Every prompt template rendered from the tails question. File name → text.
inline std::vector<std::pair<std::string, std::string>> golden_cases() {
  using namespace manbench;
  const Question q = tails();
  const auto ids = assign_identities(5, q.task);
  const auto rs = rs_case_turns();
  std::span<const ChatTurn> one(rs.data(), 1), two(rs.data(), 2), three(rs.data(), 3);
  std::vector<ChatTurn> wrong_first{said("You", "The best answer is: \"(B) three\"")};

  return {
      {"baseline.txt", prompts::baseline(q)},
      {"generic_generation.txt", prompts::generic_generation(ids[0], q, 'B')},
      {"role_E.txt", prompts::role_generation(Archetype::E, ids[0], q, 'B', {})},
      {"role_D.txt", prompts::role_generation(Archetype::D, ids[1], q, 'B', one)},
      {"role_G.txt", prompts::role_generation(Archetype::G, ids[2], q, 'B', two)},
      {"role_A.txt", prompts::role_generation(Archetype::A, ids[3], q, 'B', three)},
      {"role_Q.txt", prompts::role_generation(Archetype::Q, ids[4], q, 'B', three)},
      {"group_context.txt", prompts::group_context(q, three)},
      {"memory_system.txt", prompts::memory_system()},
      {"memory_acquisition.txt", prompts::memory_acquisition(q, three)},
      {"memory_requery.txt", prompts::memory_requery(q, gl_case_memory())},
      {"distractor_selection.txt", prompts::distractor_selection(q)},
      {"cognitive_anchoring.txt", prompts::cognitive_anchoring(q, three)},
      {"source_scrutiny.txt", prompts::source_scrutiny(q, three)},
      {"correct_guidance.txt", prompts::correct_guidance(ids[0], q, {})},
      {"corrective_guidance.txt",
       prompts::corrective_guidance(ids[1], q, prompts::render_option(q, 'B'), wrong_first)},
      {"enriching_guidance.txt", prompts::enriching_guidance(ids[1], q, one)},
  };
}

}  // namespace fixture
