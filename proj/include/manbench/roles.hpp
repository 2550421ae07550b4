#pragma once

#include <array>
#include <string_view>
#include <vector>

namespace manbench {

// The five strategic archetypes of a role-based group.
enum class Archetype {
  E,  // Error Conclusion Initiator
  D,  // Detail Support Provider
  G,  // Group Consensus Reinforcer
  A,  // Authority Endorser
  Q,  // Questioning Compromiser
};

inline constexpr std::array<Archetype, 5> kAllArchetypes = {
    Archetype::E, Archetype::D, Archetype::G, Archetype::A, Archetype::Q};

char archetype_letter(Archetype a);
std::string_view archetype_name(Archetype a);

struct RoleSequence {
  int n = 0;
  std::vector<Archetype> sequence;

  int count(Archetype a) const;
};

// Speaking order for a role-based group of size n. Rows 1..15 follow the
// published composition table; beyond 15, Group Consensus Reinforcers are
// appended to the n=15 order. Throws InvalidGroupSize for n < 1.
RoleSequence role_sequence(int n);

}  // namespace manbench
