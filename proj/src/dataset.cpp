#include "manbench/dataset.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "manbench/agents.hpp"
#include "manbench/error.hpp"
#include "manbench/prompts.hpp"
#include "manbench/text.hpp"

namespace manbench {

namespace {

using json = nlohmann::json;

const std::array<TaskManifest, 20> kTasks = {{
    {"anachronisms", Domain::HistoryTimeEvents, "Historical context expert", 230},
    {"empirical_judgments", Domain::HistoryTimeEvents, "Empirical judgment expert", 99},
    {"presuppositions_as_nli", Domain::HistoryTimeEvents, "Natural language inference expert", 300},
    {"which_wiki_edit", Domain::HistoryTimeEvents, "Wikipedia revision expert", 300},

    {"causal_judgment", Domain::MisconceptionsSocialCognition, "Causal reasoning expert", 190},
    {"disambiguation_qa", Domain::MisconceptionsSocialCognition, "Pronoun disambiguation expert", 258},
    {"epistemic_reasoning", Domain::MisconceptionsSocialCognition, "Epistemic reasoning expert", 300},
    {"known_unknowns", Domain::MisconceptionsSocialCognition, "Hallucination detection expert", 46},
    {"misconceptions", Domain::MisconceptionsSocialCognition, "Misconception identification expert", 219},

    {"auto_categorization", Domain::GeneralKnowledge, "Classification expert", 300},
    {"general_knowledge", Domain::GeneralKnowledge, "General knowledge expert", 70},
    {"qa_wikidata", Domain::GeneralKnowledge, "Wikidata QA expert", 300},
    {"tell_me_why", Domain::GeneralKnowledge, "Narrative reasoning expert", 300},

    {"dyck_languages", Domain::DomainSpecificKnowledge, "Dyck language expert", 300},
    {"international_phonetic_alphabet_nli", Domain::DomainSpecificKnowledge, "IPA NLI expert", 126},
    {"language_identification", Domain::DomainSpecificKnowledge, "Language identification expert", 300},
    {"movie_recommendation", Domain::DomainSpecificKnowledge, "Movie recommendation expert", 300},
    {"salient_translation_error_detection", Domain::DomainSpecificKnowledge, "Translation error detection expert", 300},
    {"sports_understanding", Domain::DomainSpecificKnowledge, "Sports understanding expert", 300},
    {"vitaminc_fact_verification", Domain::DomainSpecificKnowledge, "Fact verification expert", 300},
}};

std::string require_string(const json& obj, const char* field, const std::string& id) {
  auto it = obj.find(field);
  if (it == obj.end()) throw SchemaError(id, field, "missing");
  if (!it->is_string()) throw SchemaError(id, field, "must be a string");
  return it->get<std::string>();
}

char require_label(const json& obj, const char* field, const std::string& id) {
  std::string s = require_string(obj, field, id);
  if (s.size() != 1 || s[0] < 'A' || s[0] > 'Z')
    throw SchemaError(id, field, "must be a single uppercase letter, got '" + s + "'");
  return s[0];
}

}  // namespace

std::string_view to_string(Domain d) {
  switch (d) {
    case Domain::HistoryTimeEvents: return "HistoryTimeEvents";
    case Domain::MisconceptionsSocialCognition: return "MisconceptionsSocialCognition";
    case Domain::GeneralKnowledge: return "GeneralKnowledge";
    case Domain::DomainSpecificKnowledge: return "DomainSpecificKnowledge";
  }
  return "unknown";
}

Domain domain_from_string(std::string_view s) {
  for (Domain d : {Domain::HistoryTimeEvents, Domain::MisconceptionsSocialCognition,
                   Domain::GeneralKnowledge, Domain::DomainSpecificKnowledge}) {
    if (to_string(d) == s) return d;
  }
  throw std::invalid_argument("unknown domain: " + std::string(s));
}

const Choice* Question::find(char label) const {
  for (const Choice& c : choices)
    if (c.label == label) return &c;
  return nullptr;
}

const Choice& Question::answer() const {
  const Choice* c = find(answer_label);
  if (!c) throw SchemaError(id, "answer", "not among choices");
  return *c;
}

void validate(const Question& q) {
  if (q.id.empty()) throw SchemaError(q.id, "id", "empty");
  if (q.text.empty()) throw SchemaError(q.id, "question", "empty");
  if (q.choices.size() < 2) throw SchemaError(q.id, "choices", "need at least 2 choices");
  if (q.choices.size() > 26) throw SchemaError(q.id, "choices", "more than 26 choices");
  std::set<char> seen;
  for (std::size_t i = 0; i < q.choices.size(); ++i) {
    char label = q.choices[i].label;
    if (!seen.insert(label).second)
      throw SchemaError(q.id, "choices", std::string("duplicate label ") + label);
    if (label != static_cast<char>('A' + i))
      throw SchemaError(q.id, "choices",
                        std::string("labels must run A, B, C, ... in order; found ") + label);
    if (text::trim(q.choices[i].text).empty())
      throw SchemaError(q.id, "choices", std::string("empty text for option ") + label);
  }
  if (!q.has_label(q.answer_label))
    throw SchemaError(q.id, "answer", std::string("label ") + q.answer_label + " not among choices");
  if (q.distractor_label) {
    if (!q.has_label(*q.distractor_label))
      throw SchemaError(q.id, "distractor",
                        std::string("label ") + *q.distractor_label + " not among choices");
    if (*q.distractor_label == q.answer_label)
      throw SchemaError(q.id, "distractor", "must differ from the answer");
  }
}

std::span<const TaskManifest> supported_tasks() { return kTasks; }

const TaskManifest& task_manifest(std::string_view task_name) {
  for (const TaskManifest& t : kTasks)
    if (t.task_name == task_name) return t;
  throw UnknownTask(std::string(task_name));
}

Domain classify_domain(std::string_view task_name) { return task_manifest(task_name).domain; }

std::vector<Question> parse_task(const json& doc) {
  if (!doc.is_object()) throw SchemaError("<file>", "task", "top level must be an object");
  std::string task = require_string(doc, "task", "<file>");
  Domain domain;
  try {
    domain = classify_domain(task);
  } catch (const UnknownTask&) {
    throw SchemaError("<file>", "task", "unsupported task '" + task + "'");
  }
  auto qs = doc.find("questions");
  if (qs == doc.end() || !qs->is_array())
    throw SchemaError("<file>", "questions", "missing or not an array");

  std::vector<Question> out;
  out.reserve(qs->size());
  std::set<std::string> ids;
  for (std::size_t i = 0; i < qs->size(); ++i) {
    const json& item = (*qs)[i];
    std::string pos = "#" + std::to_string(i);
    if (!item.is_object()) throw SchemaError(pos, "question", "entry is not an object");
    Question q;
    q.id = require_string(item, "id", pos);
    if (!ids.insert(q.id).second) throw SchemaError(q.id, "id", "duplicate id");
    q.task = task;
    q.domain = domain;
    q.text = require_string(item, "question", q.id);
    auto choices = item.find("choices");
    if (choices == item.end() || !choices->is_array())
      throw SchemaError(q.id, "choices", "missing or not an array");
    for (const json& c : *choices) {
      if (!c.is_object()) throw SchemaError(q.id, "choices", "entry is not an object");
      q.choices.push_back({require_label(c, "label", q.id), require_string(c, "text", q.id)});
    }
    q.answer_label = require_label(item, "answer", q.id);
    if (item.contains("distractor") && !item["distractor"].is_null())
      q.distractor_label = require_label(item, "distractor", q.id);
    validate(q);
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<Question> load_task(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("<file>", "json", std::string(path.string()) + ": " + e.what());
  }
  return parse_task(doc);
}

json task_to_json(std::span<const Question> questions) {
  json doc = json::object();
  doc["task"] = questions.empty() ? std::string() : questions.front().task;
  json arr = json::array();
  for (const Question& q : questions) {
    json item;
    item["id"] = q.id;
    item["question"] = q.text;
    json choices = json::array();
    for (const Choice& c : q.choices)
      choices.push_back({{"label", std::string(1, c.label)}, {"text", c.text}});
    item["choices"] = std::move(choices);
    item["answer"] = std::string(1, q.answer_label);
    if (q.distractor_label) item["distractor"] = std::string(1, *q.distractor_label);
    arr.push_back(std::move(item));
  }
  doc["questions"] = std::move(arr);
  return doc;
}

void save_task(const std::filesystem::path& path, std::span<const Question> questions) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << task_to_json(questions).dump(2) << '\n';
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::filesystem::path curated_path(const std::filesystem::path& source) {
  std::filesystem::path out = source;
  out.replace_filename(source.stem().string() + ".curated" + source.extension().string());
  return out;
}

std::vector<Question> subsample(std::span<const Question> questions, std::size_t cap,
                                std::uint64_t seed) {
  if (cap == 0) throw std::invalid_argument("subsample cap must be at least 1");
  if (questions.size() <= cap) return {questions.begin(), questions.end()};

  std::vector<std::size_t> idx(questions.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());

  std::vector<Question> out;
  out.reserve(cap);
  for (std::size_t i : idx) out.push_back(questions[i]);
  return out;
}

std::vector<Question> convert_bigbench(const json& doc, const std::string& task_name) {
  Domain domain = classify_domain(task_name);
  std::vector<Question> out;
  const json& examples = doc.at("examples");
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const json& ex = examples[i];
    if (!ex.contains("input") || !ex.contains("target_scores")) continue;
    const json& scores = ex["target_scores"];
    if (!scores.is_object() || scores.size() < 2 || scores.size() > 26) continue;

    Question q;
    q.id = task_name + "-" + std::to_string(i);
    q.task = task_name;
    q.domain = domain;
    q.text = text::trim(ex["input"].get<std::string>());
    int positives = 0;
    char label = 'A';
    // nlohmann::json objects iterate in key order; BIG-bench option order is
    // not semantically meaningful, so sorted order is as good as any.
    for (auto it = scores.begin(); it != scores.end(); ++it, ++label) {
      q.choices.push_back({label, it.key()});
      if (it.value().get<double>() > 0.0) {
        ++positives;
        q.answer_label = label;
      }
    }
    if (positives != 1 || q.text.empty()) continue;
    validate(q);
    out.push_back(std::move(q));
  }
  return out;
}

std::string distractor_prompt(const Question& q) { return prompts::distractor_selection(q); }

std::optional<char> parse_selected_distractor(const std::string& response, const Question& q) {
  static constexpr std::string_view kKey = "Selected Primary Distractor:";
  std::optional<std::string> value;
  for (const std::string& raw : text::split_lines(response)) {
    std::string line = text::trim(raw);
    while (!line.empty() && (line.front() == '*' || line.front() == '#')) line.erase(0, 1);
    line = text::trim(line);
    if (text::starts_with_ci(line, kKey)) {
      std::string v = line.substr(kKey.size());
      std::size_t stars = v.find_first_not_of("* ");
      v = stars == std::string::npos ? std::string() : v.substr(stars);
      value = text::trim(v);
    }
  }
  if (!value) return std::nullopt;

  std::string v = *value;
  if (v.size() >= 2 && v.front() == '[' && v.back() == ']') v = text::trim(v.substr(1, v.size() - 2));

  // Explicit "(X)" marker naming an incorrect option.
  for (std::size_t pos = v.find('('); pos != std::string::npos; pos = v.find('(', pos + 1)) {
    if (pos + 2 < v.size() && v[pos + 2] == ')') {
      char label = v[pos + 1];
      if (label != q.answer_label && q.has_label(label)) return label;
    }
  }

  std::string norm = text::normalize_option(v);
  for (const Choice& c : q.choices) {
    if (c.label == q.answer_label) continue;
    if (text::normalize_option(c.text) == norm) return c.label;
  }
  return std::nullopt;
}

char select_distractor(const Question& q, Backend& backend, const CompletionParams& params,
                       int max_retries, bool allow_fallback) {
  if (q.choices.size() < 2) throw SchemaError(q.id, "choices", "need at least 2 choices");
  std::vector<const Choice*> incorrect;
  for (const Choice& c : q.choices)
    if (c.label != q.answer_label) incorrect.push_back(&c);
  if (incorrect.size() == 1) return incorrect.front()->label;

  std::vector<ChatTurn> messages{{Role::user, distractor_prompt(q), std::nullopt}};
  std::string last;
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    last = backend.complete(messages, params);
    if (auto label = parse_selected_distractor(last, q)) return *label;
    spdlog::debug("distractor parse failed for {} (attempt {})", q.id, attempt + 1);
    messages.push_back({Role::assistant, last, std::nullopt});
    messages.push_back({Role::user, prompts::distractor_format_reminder(), std::nullopt});
  }

  if (!allow_fallback)
    throw DistractorUnresolved("no usable distractor for question " + q.id);

  // Compare against the selection line when present, else the whole reply.
  std::string target = last;
  for (const std::string& line : text::split_lines(last)) {
    std::string t = text::trim(line);
    if (text::starts_with_ci(t, "Selected Primary Distractor:"))
      target = t.substr(std::string_view("Selected Primary Distractor:").size());
  }
  std::string norm = text::normalize_option(target);
  const Choice* best = incorrect.front();
  double best_distance = std::numeric_limits<double>::infinity();
  for (const Choice* c : incorrect) {
    double d = text::normalized_edit_distance(text::normalize_option(c->text), norm);
    if (d < best_distance) {
      best_distance = d;
      best = c;
    }
  }
  spdlog::warn("distractor for {} fell back to option {} (edit distance {:.3f})", q.id,
               best->label, best_distance);
  return best->label;
}

}  // namespace manbench
