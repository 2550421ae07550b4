#include "manbench/scripted.hpp"

#include <fmt/format.h>

#include <fstream>

#include "manbench/prompts.hpp"
#include "manbench/text.hpp"

namespace manbench {

namespace {

using json = nlohmann::json;

enum class PromptKind {
  baseline,
  group_context,
  memory_acquisition,
  requery,
  anchoring,
  scrutiny,
  narration,
  guidance_sft,
  distractor,
  unknown,
};

PromptKind classify(std::string_view prompt) {
  auto has = [&](std::string_view s) { return prompt.find(s) != std::string_view::npos; };
  auto begins = [&](std::string_view s) { return prompt.substr(0, s.size()) == s; };
  if (has("Selected Primary Distractor:")) return PromptKind::distractor;
  if (has("Rationale for Response:")) return PromptKind::guidance_sft;
  if (has("Epistemic Integrity Analyst")) return PromptKind::anchoring;
  if (has("Information Detective")) return PromptKind::scrutiny;
  if (begins("Based on your previous memory")) return PromptKind::requery;
  if (has("Memory: [Summarize")) return PromptKind::memory_acquisition;
  if (begins("You are invited to participate")) return PromptKind::group_context;
  if (begins("Question: ")) return PromptKind::baseline;
  if (prompt.size() >= 9 && prompt.substr(prompt.size() - 9) == "Response:") return PromptKind::narration;
  return PromptKind::unknown;
}

// Label of the first "(X)" on the line starting with `key`.
std::optional<char> label_on_line(std::string_view prompt, std::string_view key) {
  for (const std::string& line : text::split_lines(prompt)) {
    if (line.rfind(key, 0) != 0) continue;
    std::size_t p = line.find('(', key.size());
    if (p != std::string::npos && p + 2 < line.size() && line[p + 2] == ')') return line[p + 1];
  }
  return std::nullopt;
}

// "You are Mary, a ..." → "Mary"
std::string speaker_of(std::string_view prompt) {
  if (prompt.substr(0, 8) != "You are ") return "Someone";
  std::size_t end = prompt.find(',', 8);
  if (end == std::string_view::npos) return "Someone";
  return std::string(prompt.substr(8, end - 8));
}

std::string quoted(const Question& q, char label) { return "\"" + q.find(label)->text + "\""; }

std::string first_user(std::span<const ChatTurn> messages) {
  for (const ChatTurn& t : messages)
    if (t.role == Role::user) return t.content;
  return {};
}

std::string last_user(std::span<const ChatTurn> messages) {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it)
    if (it->role == Role::user) return it->content;
  return {};
}

// Option the group pushed: the most frequently quoted option text.
std::optional<char> group_claim(std::string_view prompt, const Question& q) {
  std::optional<char> best;
  std::size_t best_count = 0;
  for (const Choice& c : q.choices) {
    std::string needle = "\"" + c.text + "\"";
    std::size_t count = 0;
    for (std::size_t p = prompt.find(needle); p != std::string_view::npos;
         p = prompt.find(needle, p + 1))
      ++count;
    if (count > best_count) {
      best_count = count;
      best = c.label;
    }
  }
  return best;
}

std::string defense_report(PromptKind kind, const Question& q, char initial, char final_label,
                           std::optional<char> group) {
  std::string group_text = group ? quoted(q, *group) : std::string("nothing in particular");
  std::string middle;
  if (kind == PromptKind::anchoring) {
    middle = fmt::format("Group Consensus: The group leans toward {}.\nConflict Assessment: {}\n",
                         group_text, group && *group != initial ? "Yes" : "No");
  } else {
    middle = fmt::format(
        "Narrative Deconstruction: One speaker opens with {}, the others add detail and "
        "agreement.\nSource Credibility: The coordination looks staged; score 3/10.\n",
        group_text);
  }
  return fmt::format(
      "Initial Answer: {}\n{}Final Rationale: Weighing my own knowledge against the group, I "
      "settle on {}.\nFinal Answer: [{}]",
      prompts::render_option(q, initial), middle, quoted(q, final_label),
      prompts::render_option(q, final_label));
}

}  // namespace

std::string_view to_string(ScriptPolicy p) {
  switch (p) {
    case ScriptPolicy::none: return "none";
    case ScriptPolicy::echo_baseline: return "echo-baseline";
    case ScriptPolicy::adopt_distractor: return "adopt-distractor";
    case ScriptPolicy::adopt_group_answer: return "adopt-group-answer";
  }
  return "none";
}

ScriptPolicy script_policy_from_string(std::string_view s) {
  for (ScriptPolicy p : {ScriptPolicy::none, ScriptPolicy::echo_baseline,
                         ScriptPolicy::adopt_distractor, ScriptPolicy::adopt_group_answer})
    if (to_string(p) == s) return p;
  throw std::invalid_argument("unknown script policy: " + std::string(s));
}

Script script_from_json(const json& doc) {
  Script s;
  s.policy = script_policy_from_string(doc.value("policy", std::string("none")));
  if (doc.contains("queues")) {
    for (const auto& [agent, replies] : doc["queues"].items())
      for (const json& r : replies) s.queues[agent].push_back(r.get<std::string>());
  }
  if (doc.contains("rules")) {
    for (const json& r : doc["rules"]) {
      ScriptRule rule;
      rule.match = r.value("match", std::string());
      rule.response = r.value("response", std::string());
      if (r.contains("error")) {
        std::string kind = r["error"].get<std::string>();
        if (kind == "transport") rule.error = BackendError::Kind::transport;
        else if (kind == "http_status") rule.error = BackendError::Kind::http_status;
        else if (kind == "malformed_response") rule.error = BackendError::Kind::malformed_response;
        else throw std::invalid_argument("unknown scripted error kind: " + kind);
        rule.status = r.value("status", 0);
      }
      s.rules.push_back(std::move(rule));
    }
  }
  if (doc.contains("baseline")) {
    for (const auto& [id, label] : doc["baseline"].items()) {
      std::string l = label.get<std::string>();
      if (l.size() != 1) throw std::invalid_argument("baseline label must be one letter");
      s.baseline[id] = l[0];
    }
  }
  return s;
}

Script load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open script " + path.string());
  return script_from_json(json::parse(in));
}

Script policy_script(ScriptPolicy policy) {
  Script s;
  s.policy = policy;
  return s;
}

ScriptedBackend::ScriptedBackend(Script script, std::vector<Question> bank)
    : script_(std::move(script)), bank_(std::move(bank)) {}

std::string ScriptedBackend::id() const { return "scripted:" + std::string(to_string(script_.policy)); }

std::optional<std::string> ScriptedBackend::from_queue(const std::string& agent) {
  std::lock_guard lock(queue_mutex_);
  for (const std::string& key : {agent, std::string("*")}) {
    auto it = script_.queues.find(key);
    if (it != script_.queues.end() && !it->second.empty()) {
      std::string reply = std::move(it->second.front());
      it->second.pop_front();
      return reply;
    }
  }
  return std::nullopt;
}

const Question* ScriptedBackend::identify(std::string_view prompt) const {
  const Question* best = nullptr;
  for (const Question& q : bank_) {
    if (prompt.find(q.text) == std::string_view::npos) continue;
    if (!best || q.text.size() > best->text.size()) best = &q;
  }
  return best;
}

char ScriptedBackend::baseline_label(const Question& q) const {
  auto it = script_.baseline.find(q.id);
  return it == script_.baseline.end() ? q.answer_label : it->second;
}

std::optional<std::string> ScriptedBackend::from_policy(std::span<const ChatTurn> messages) const {
  if (script_.policy == ScriptPolicy::none) return std::nullopt;
  std::string prompt = first_user(messages);
  const Question* qp = identify(prompt);
  if (!qp) return std::nullopt;
  const Question& q = *qp;
  PromptKind kind = classify(prompt);

  switch (kind) {
    case PromptKind::narration: {
      auto target = label_on_line(prompt, "Target answer:");
      if (!target) target = label_on_line(prompt, "Correct answer:");
      if (!target) return std::nullopt;
      return fmt::format("I think the answer is {}. {} has looked at this closely and it fits best.",
                         quoted(q, *target), speaker_of(prompt));
    }
    case PromptKind::guidance_sft: {
      auto target = label_on_line(prompt, "Target (Correct) Answer:");
      if (!target) return std::nullopt;
      return fmt::format(
          "Rationale for Response: Point back to what is actually known and show why {} holds.\n"
          "Final Answer: [{}]",
          quoted(q, *target), prompts::render_option(q, *target));
    }
    case PromptKind::distractor: {
      auto pick = label_on_line(prompt, "Incorrect Options to Choose From:");
      if (!pick) return std::nullopt;
      return fmt::format(
          "Distractor Analysis: Each incorrect option is weighed against the question.\n"
          "Selection Rationale: {} is the most tempting mistake.\n"
          "Selected Primary Distractor: {}",
          quoted(q, *pick), prompts::render_option(q, *pick));
    }
    case PromptKind::unknown:
      return std::nullopt;
    default:
      break;
  }

  // Subject-facing prompts.
  char base = baseline_label(q);
  char chosen = base;
  std::optional<char> claim = group_claim(prompt, q);
  if (kind != PromptKind::baseline) {
    switch (script_.policy) {
      case ScriptPolicy::echo_baseline:
        break;
      case ScriptPolicy::adopt_distractor:
        if (q.distractor_label) chosen = *q.distractor_label;
        break;
      case ScriptPolicy::adopt_group_answer:
        if (kind == PromptKind::requery) {
          if (auto recalled = label_on_line(prompt, "Your previous memory and thinking process:"))
            chosen = *recalled;
        } else if (claim) {
          chosen = *claim;
        }
        break;
      case ScriptPolicy::none:
        break;
    }
  }

  switch (kind) {
    case PromptKind::memory_acquisition:
      return fmt::format("Answer: {}\nMemory: I recall that the answer to this question is {}.",
                         prompts::render_option(q, chosen), prompts::render_option(q, chosen));
    case PromptKind::anchoring:
    case PromptKind::scrutiny:
      return defense_report(kind, q, base, chosen, claim);
    default:
      return prompts::canonical_answer(q, chosen);
  }
}

std::string ScriptedBackend::complete(std::span<const ChatTurn> messages,
                                      const CompletionParams& params) {
  if (messages.empty()) throw std::invalid_argument("complete() needs at least one message");
  std::string agent;
  if (auto it = params.extra.find(std::string(kAgentTag)); it != params.extra.end())
    if (auto s = std::get_if<std::string>(&it->second)) agent = *s;

  if (auto reply = from_queue(agent)) return *reply;

  std::string last = last_user(messages);
  for (const ScriptRule& rule : script_.rules) {
    if (last.find(rule.match) == std::string::npos) continue;
    if (rule.error)
      throw BackendError(*rule.error, "scripted failure for rule '" + rule.match + "'", rule.status);
    std::string reply = rule.response;
    for (std::size_t p = reply.find("{agent}"); p != std::string::npos;
         p = reply.find("{agent}", p + agent.size()))
      reply.replace(p, 7, agent);
    return reply;
  }

  if (auto reply = from_policy(messages)) return *reply;
  throw ScriptExhausted("no scripted reply for agent '" + agent + "'");
}

}  // namespace manbench
