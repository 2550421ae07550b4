#include "manbench/sft.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "manbench/error.hpp"
#include "manbench/prompts.hpp"
#include "manbench/text.hpp"

namespace manbench {

namespace {

std::vector<ChatTurn> first_request(const ProtocolOutcome& o) {
  std::vector<ChatTurn> out;
  for (const ChatTurn& t : o.subject_turns) {
    if (t.role == Role::assistant) break;
    out.push_back(t);
  }
  return out;
}

std::string rendered_option(const Question& q, std::optional<char> label, const std::string& raw) {
  if (label && q.find(*label)) return prompts::render_option(q, *label);
  return text::trim(raw);
}

}  // namespace

std::string_view to_string(SftKind k) {
  switch (k) {
    case SftKind::resilience: return "resilience";
    case SftKind::corrective: return "corrective";
    case SftKind::enriching: return "enriching";
  }
  return "resilience";
}

SftKind sft_kind_from_string(std::string_view s) {
  for (SftKind k : {SftKind::resilience, SftKind::corrective, SftKind::enriching})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown SFT kind: " + std::string(s));
}

nlohmann::json to_json(const SftRecord& r) {
  return {{"system", r.system},     {"prompt", r.prompt},           {"response", r.response},
          {"kind", to_string(r.kind)}, {"question_id", r.question_id}, {"metadata", r.metadata}};
}

std::optional<SftRecord> build_resilience_record(const ProtocolOutcome& defended, const Question& q) {
  if (defended.defense == Defense::none)
    throw std::invalid_argument("resilience records come from defended outcomes");
  if (!defended.correct) return std::nullopt;

  // Short-term: the report is the final answer. Long-term: it is the
  // consolidation reply, and the re-query must also have held.
  const std::string& report =
      is_long_term(defended.protocol) && defended.intermediate_answer ? *defended.intermediate_answer
                                                                       : defended.raw_answer;
  DefenseReport parsed = parse_defense_report(report, q.choices, defended.defense);
  if (parsed.final_answer_label != q.answer_label) return std::nullopt;

  SftRecord r;
  r.kind = SftKind::resilience;
  for (const ChatTurn& t : first_request(defended)) {
    std::string& slot = t.role == Role::system ? r.system : r.prompt;
    if (!slot.empty()) slot += "\n\n";
    slot += t.content;
  }
  r.response = report;
  r.question_id = q.id;
  r.metadata = {{"protocol", std::string(to_string(defended.protocol))},
                {"defense", std::string(to_string(defended.defense))},
                {"group_size", std::to_string(defended.group_size)},
                {"answer", std::string(1, q.answer_label)}};
  r.choices = q.choices;
  r.answer_label = q.answer_label;
  return r;
}

SftRecord build_cooperative_record(SftKind kind, const Question& q,
                                   const ProtocolOutcome& baseline_outcome, Backend& narrator,
                                   const CompletionParams& params, int group_size,
                                   int max_regenerations) {
  if (kind == SftKind::resilience)
    throw std::invalid_argument("cooperative records are corrective or enriching");
  if (baseline_outcome.protocol != Protocol::B || baseline_outcome.question_id != q.id)
    throw EligibilityError("cooperative records need the question's baseline outcome");
  if (kind == SftKind::corrective && baseline_outcome.correct)
    throw EligibilityError("corrective guidance needs an incorrect baseline answer (" + q.id + ")");
  if (kind == SftKind::enriching && !baseline_outcome.correct)
    throw EligibilityError("enriching guidance needs a correct baseline answer (" + q.id + ")");

  std::vector<ChatTurn> guidance = generate_group_turns(Protocol::C, q, group_size, narrator, params);

  // The subject's own earlier answer opens the history for corrective cases.
  std::vector<ChatTurn> history;
  std::string initial;
  if (kind == SftKind::corrective) {
    initial = rendered_option(q, baseline_outcome.parsed_label, baseline_outcome.raw_answer);
    history.push_back({Role::assistant, "The best answer is: \"" + initial + "\"", "You"});
  }
  history.insert(history.end(), guidance.begin(), guidance.end());

  AgentIdentity writer = assign_identities(group_size + 1, q.task).back();
  std::string prompt = kind == SftKind::corrective
                           ? prompts::corrective_guidance(writer, q, initial, history)
                           : prompts::enriching_guidance(writer, q, history);

  CompletionParams p = params;
  p.extra[std::string(kAgentTag)] = writer.name;
  std::vector<ChatTurn> messages{{Role::user, prompt, std::nullopt}};
  for (int attempt = 0; attempt <= max_regenerations; ++attempt) {
    if (attempt > 0) p.extra["seed"] = std::int64_t{attempt};
    std::string response = text::trim(narrator.complete(messages, p));
    if (final_answer_label(response, q.choices) != q.answer_label) {
      spdlog::info("{} response for {} missed the ground truth (attempt {})", to_string(kind), q.id,
                   attempt + 1);
      continue;
    }
    SftRecord r;
    r.kind = kind;
    r.prompt = prompts::group_context(q, history);
    r.response = std::move(response);
    r.question_id = q.id;
    r.metadata = {{"protocol", "C"},
                  {"group_size", std::to_string(group_size)},
                  {"answer", std::string(1, q.answer_label)}};
    r.choices = q.choices;
    r.answer_label = q.answer_label;
    return r;
  }
  throw ProtocolError(fmt::format("no {} response for {} reached the ground truth", to_string(kind),
                                  q.id));
}

SftRatio parse_sft_ratio(std::string_view s) {
  auto colon = s.find(':');
  if (colon == std::string_view::npos) throw std::invalid_argument("ratio must look like 1:1");
  SftRatio r;
  try {
    r.resilience = std::stoi(std::string(s.substr(0, colon)));
    r.cooperative = std::stoi(std::string(s.substr(colon + 1)));
  } catch (const std::exception&) {
    throw std::invalid_argument("ratio must look like 1:1");
  }
  if (r.resilience < 1 || r.cooperative < 1) throw std::invalid_argument("ratio terms must be positive");
  return r;
}

SftSummary emit_sft_dataset(const std::vector<SftRecord>& records, const std::filesystem::path& path,
                            SftRatio ratio, std::uint64_t seed) {
  if (ratio.resilience < 1 || ratio.cooperative < 1)
    throw std::invalid_argument("ratio terms must be positive");
  std::vector<const SftRecord*> resilience;
  std::vector<const SftRecord*> cooperative;
  for (const SftRecord& r : records) {
    if (!r.choices.empty() && final_answer_label(r.response, r.choices) != r.answer_label)
      throw std::invalid_argument("record for " + r.question_id + " does not resolve to its answer");
    (r.kind == SftKind::resilience ? resilience : cooperative).push_back(&r);
  }

  SftSummary s;
  s.resilience_in = resilience.size();
  s.cooperative_in = cooperative.size();
  if (resilience.empty() || cooperative.empty())
    throw RatioUnsatisfiable(fmt::format("cannot honour {}:{} with {} resilience and {} cooperative records",
                                         ratio.resilience, ratio.cooperative, resilience.size(),
                                         cooperative.size()));

  std::size_t k = std::min(resilience.size() / ratio.resilience, cooperative.size() / ratio.cooperative);
  if (k == 0)
    throw RatioUnsatisfiable("too few records for the requested ratio");
  std::size_t keep_r = k * ratio.resilience;
  std::size_t keep_c = k * ratio.cooperative;
  s.downsampled = keep_r < resilience.size() || keep_c < cooperative.size();

  std::mt19937_64 rng(seed);
  std::shuffle(resilience.begin(), resilience.end(), rng);
  std::shuffle(cooperative.begin(), cooperative.end(), rng);
  std::vector<const SftRecord*> out(resilience.begin(), resilience.begin() + keep_r);
  out.insert(out.end(), cooperative.begin(), cooperative.begin() + keep_c);
  std::shuffle(out.begin(), out.end(), rng);

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  for (const SftRecord* r : out) {
    f << to_json(*r).dump() << '\n';
    switch (r->kind) {
      case SftKind::resilience: ++s.resilience_out; break;
      case SftKind::corrective: ++s.corrective_out; break;
      case SftKind::enriching: ++s.enriching_out; break;
    }
  }
  f.flush();
  if (!f) throw IoError("write failed: " + path.string());
  if (s.downsampled)
    spdlog::info("down-sampled to {} resilience + {} cooperative records", keep_r, keep_c);
  return s;
}

}  // namespace manbench
