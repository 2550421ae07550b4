#include "manbench/roles.hpp"

#include <algorithm>
#include <string>

#include "manbench/error.hpp"

namespace manbench {

namespace {

// Interaction order for group sizes 1..15.
constexpr std::string_view kSequences[] = {
    "E",
    "ED",
    "EDG",
    "EDGA",
    "EDGAQ",
    "EDGGAQ",
    "EDDGGAQ",
    "EDDGGAAQ",
    "EDDGGAAQG",
    "EDDGGAAQGG",
    "EDDGGAAQGGG",
    "EDDDGGAAQGGG",
    "EDDDGGAAAQGGG",
    "EDDDGGAAAQGGGG",
    "EDDDDGGAAAQGGGG",
};

Archetype from_letter(char c) {
  switch (c) {
    case 'E': return Archetype::E;
    case 'D': return Archetype::D;
    case 'G': return Archetype::G;
    case 'A': return Archetype::A;
    case 'Q': return Archetype::Q;
  }
  throw std::logic_error(std::string("bad archetype letter ") + c);
}

}  // namespace

char archetype_letter(Archetype a) {
  switch (a) {
    case Archetype::E: return 'E';
    case Archetype::D: return 'D';
    case Archetype::G: return 'G';
    case Archetype::A: return 'A';
    case Archetype::Q: return 'Q';
  }
  return '?';
}

std::string_view archetype_name(Archetype a) {
  switch (a) {
    case Archetype::E: return "Error Conclusion Initiator";
    case Archetype::D: return "Detail Support Provider";
    case Archetype::G: return "Group Consensus Reinforcer";
    case Archetype::A: return "Authority Endorser";
    case Archetype::Q: return "Questioning Compromiser";
  }
  return "unknown";
}

int RoleSequence::count(Archetype a) const {
  return static_cast<int>(std::count(sequence.begin(), sequence.end(), a));
}

RoleSequence role_sequence(int n) {
  if (n < 1) throw InvalidGroupSize("group size must be at least 1, got " + std::to_string(n));
  constexpr int kTableMax = static_cast<int>(std::size(kSequences));
  std::string_view row = kSequences[std::min(n, kTableMax) - 1];

  RoleSequence out;
  out.n = n;
  out.sequence.reserve(static_cast<std::size_t>(n));
  for (char c : row) out.sequence.push_back(from_letter(c));
  while (static_cast<int>(out.sequence.size()) < n) out.sequence.push_back(Archetype::G);
  return out;
}

}  // namespace manbench
