#include "manbench/defenses.hpp"

#include <cctype>
#include <stdexcept>

#include "manbench/prompts.hpp"
#include "manbench/text.hpp"

namespace manbench {

namespace {

const std::vector<std::string> kAnchoringFields{"Initial Answer", "Group Consensus",
                                                "Conflict Assessment", "Final Rationale",
                                                "Final Answer"};
const std::vector<std::string> kScrutinyFields{"Initial Answer", "Narrative Deconstruction",
                                               "Source Credibility", "Final Rationale",
                                               "Final Answer"};

// Strips list/markdown decoration models put in front of a field name.
std::string_view undecorate(std::string_view line) {
  while (!line.empty() && (line.front() == ' ' || line.front() == '\t' || line.front() == '*' ||
                           line.front() == '#' || line.front() == '-' || line.front() == '>'))
    line.remove_prefix(1);
  return line;
}

// When `line` opens field `name`, returns the rest of the line.
std::optional<std::string> field_start(std::string_view line, const std::string& name) {
  line = undecorate(line);
  if (!text::starts_with_ci(line, name)) return std::nullopt;
  line.remove_prefix(name.size());
  while (!line.empty() && line.front() == '*') line.remove_prefix(1);
  if (line.empty() || line.front() != ':') return std::nullopt;
  line.remove_prefix(1);
  while (!line.empty() && line.front() == '*') line.remove_prefix(1);
  return std::string(line);
}

std::string unbracket(std::string s) {
  s = text::trim(s);
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = text::trim(s.substr(1, s.size() - 2));
  return s;
}

std::vector<ChatTurn> wrap(std::string prompt, std::span<const ChatTurn> history) {
  if (history.empty()) throw std::invalid_argument("defense wrapper needs a non-empty social context");
  return {{Role::user, std::move(prompt), std::nullopt}};
}

}  // namespace

std::vector<ChatTurn> wrap_cognitive_anchoring(const Question& q, std::span<const ChatTurn> history) {
  return wrap(history.empty() ? std::string() : prompts::cognitive_anchoring(q, history), history);
}

std::vector<ChatTurn> wrap_source_scrutiny(const Question& q, std::span<const ChatTurn> history) {
  return wrap(history.empty() ? std::string() : prompts::source_scrutiny(q, history), history);
}

const std::string& DefenseReport::field(std::string_view name) const {
  static const std::string empty;
  if (name == "Initial Answer") return initial_answer;
  if (name == "Final Rationale") return final_rationale;
  if (name == "Final Answer") return final_answer;
  for (const auto& [k, v] : middle_fields)
    if (k == name) return v;
  return empty;
}

std::vector<std::string> defense_fields(Defense d) {
  switch (d) {
    case Defense::anchoring: return kAnchoringFields;
    case Defense::scrutiny: return kScrutinyFields;
    case Defense::none: break;
  }
  return {"Final Answer"};
}

std::optional<int> credibility_score(std::string_view s) {
  std::optional<int> first;
  for (std::size_t i = 0; i < s.size();) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    int v = 0;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j])) && v <= 100)
      v = v * 10 + (s[j++] - '0');
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    bool in_range = v >= 1 && v <= 10;
    std::size_t k = j;
    while (k < s.size() && s[k] == ' ') ++k;
    bool out_of_ten = false;
    if (k < s.size() && s[k] == '/') {
      std::size_t t = k + 1;
      while (t < s.size() && s[t] == ' ') ++t;
      out_of_ten = s.substr(t, 2) == "10" &&
                   (t + 2 >= s.size() || !std::isdigit(static_cast<unsigned char>(s[t + 2])));
    }
    if (in_range && out_of_ten) return v;
    if (in_range && !first) first = v;
    i = j;
  }
  return first;
}

std::optional<char> final_answer_label(std::string_view text, std::span<const Choice> choices) {
  std::optional<std::string> value;
  for (const std::string& line : text::split_lines(text))
    if (auto rest = field_start(line, "Final Answer")) value = *rest;
  if (!value) return parse_answer(text, choices);
  return parse_answer(unbracket(*value), choices);
}

DefenseReport parse_defense_report(std::string_view body, std::span<const Choice> choices,
                                   Defense defense) {
  const std::vector<std::string> fields = defense_fields(defense);
  std::vector<std::optional<std::string>> values(fields.size());

  int current = -1;
  for (const std::string& line : text::split_lines(body)) {
    bool opened = false;
    for (std::size_t f = 0; f < fields.size(); ++f) {
      if (auto rest = field_start(line, fields[f])) {
        current = static_cast<int>(f);
        values[f] = *rest;  // a repeated field keeps its last occurrence
        opened = true;
        break;
      }
    }
    if (!opened && current >= 0) *values[current] += "\n" + line;
  }

  DefenseReport r;
  for (std::size_t f = 0; f < fields.size(); ++f) {
    std::string v = values[f] ? unbracket(*values[f]) : std::string();
    if (!values[f]) r.degraded = true;
    const std::string& name = fields[f];
    if (name == "Initial Answer") r.initial_answer = v;
    else if (name == "Final Rationale") r.final_rationale = v;
    else if (name == "Final Answer") r.final_answer = v;
    else r.middle_fields.emplace_back(name, v);
  }
  if (values.back()) r.final_answer_label = parse_answer(r.final_answer, choices);
  if (defense == Defense::scrutiny) r.credibility = credibility_score(r.field("Source Credibility"));
  return r;
}

SubjectStage defense_stage(Defense defense) {
  SubjectStage s;
  s.defense = defense;
  s.reminder = prompts::report_format_reminder();
  s.wrap = defense == Defense::anchoring ? wrap_cognitive_anchoring : wrap_source_scrutiny;
  s.label = [defense](const std::string& reply, const Question& q) {
    return parse_defense_report(reply, q.choices, defense).final_answer_label;
  };
  // What a defended subject carries into the long-term re-query: its own
  // conclusion, not the group's narrative.
  s.memory = [defense](const std::string& reply) -> std::string {
    DefenseReport r = parse_defense_report(reply, {}, defense);
    if (r.final_answer.empty()) return {};
    std::string m = r.final_rationale;
    if (!m.empty()) m += "\n";
    return m + "Final Answer: " + r.final_answer;
  };
  return s;
}

ProtocolOutcome run_defended_protocol(Defense defense, Protocol protocol, const Question& q,
                                      int group_size, Backend& subject, Backend& narrator,
                                      const ProtocolParams& params) {
  if (protocol == Protocol::B) throw std::invalid_argument("defenses apply to group protocols only");
  auto turns = generate_group_turns(protocol, q, group_size, narrator, params.narrator);
  return run_defended_protocol_with_turns(defense, protocol, q, group_size, std::move(turns),
                                          subject, params);
}

ProtocolOutcome run_defended_protocol_with_turns(Defense defense, Protocol protocol,
                                                 const Question& q, int group_size,
                                                 std::vector<ChatTurn> group_turns,
                                                 Backend& subject, const ProtocolParams& params) {
  if (protocol == Protocol::B) throw std::invalid_argument("defenses apply to group protocols only");
  if (defense == Defense::none)
    return run_protocol_with_turns(protocol, q, group_size, std::move(group_turns), subject, params);
  SubjectStage stage = defense_stage(defense);
  return run_protocol_with_turns(protocol, q, group_size, std::move(group_turns), subject, params,
                                 &stage);
}

}  // namespace manbench
