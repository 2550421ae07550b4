#include "manbench/ledger.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <sstream>

#include "manbench/error.hpp"

namespace manbench {

namespace {

using json = nlohmann::json;

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open ledger " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string unit_key(const std::string& task, const std::string& question_id, Protocol p,
                     int group_size) {
  return fmt::format("{}/{}/{}/{}", task, question_id, to_string(p), p == Protocol::B ? 0 : group_size);
}

json to_json(const LedgerEntry& e) {
  return {{"run_id", e.run_id},
          {"config_digest", e.config_digest},
          {"unit", e.unit},
          {"task", e.task},
          {"domain", to_string(e.domain)},
          {"subject_backend", e.subject_backend},
          {"narrator_backend", e.narrator_backend},
          {"started_at", e.started_at},
          {"finished_at", e.finished_at},
          {"outcome", to_json(e.outcome)}};
}

LedgerEntry ledger_entry_from_json(const json& j) {
  LedgerEntry e;
  e.run_id = j.at("run_id").get<std::string>();
  e.config_digest = j.at("config_digest").get<std::string>();
  e.unit = j.at("unit").get<std::string>();
  e.task = j.at("task").get<std::string>();
  e.domain = domain_from_string(j.at("domain").get<std::string>());
  e.subject_backend = j.value("subject_backend", std::string());
  e.narrator_backend = j.value("narrator_backend", std::string());
  e.started_at = j.value("started_at", std::string());
  e.finished_at = j.value("finished_at", std::string());
  e.outcome = outcome_from_json(j.at("outcome"));
  return e;
}

LedgerWriter::LedgerWriter(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::app);
  if (!out_) throw IoError("cannot open ledger for append: " + path.string());
}

void LedgerWriter::append(const LedgerEntry& e) {
  // Serialize outside the lock; write the line in one call.
  std::string line = to_json(e).dump() + "\n";
  std::lock_guard lock(mu_);
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  out_.flush();
  if (!out_) throw IoError("ledger write failed");
  ++appended_;
}

std::size_t LedgerWriter::appended() const {
  std::lock_guard lock(mu_);
  return appended_;
}

LedgerContents read_ledger(const std::filesystem::path& path) {
  LedgerContents c;
  if (!std::filesystem::exists(path)) return c;
  std::string body = slurp(path);
  std::size_t start = 0;
  int lineno = 0;
  while (start < body.size()) {
    std::size_t nl = body.find('\n', start);
    if (nl == std::string::npos) {
      c.torn_bytes = body.size() - start;
      break;
    }
    ++lineno;
    std::string_view line(body.data() + start, nl - start);
    start = nl + 1;
    if (line.empty()) continue;
    try {
      c.entries.push_back(ledger_entry_from_json(json::parse(line)));
    } catch (const std::exception& ex) {
      throw IoError(fmt::format("{}:{}: corrupt ledger line ({})", path.string(), lineno, ex.what()));
    }
  }
  return c;
}

std::size_t repair_ledger(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return 0;
  std::string body = slurp(path);
  std::size_t keep = body.rfind('\n');
  keep = keep == std::string::npos ? 0 : keep + 1;
  std::size_t cut = body.size() - keep;
  if (cut) std::filesystem::resize_file(path, keep);
  return cut;
}

std::set<std::string> completed_units(const std::vector<LedgerEntry>& entries) {
  std::set<std::string> out;
  for (const LedgerEntry& e : entries) out.insert(e.unit);
  return out;
}

std::string canonicalize_ledger(const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::string>> rows;
  for (const LedgerEntry& e : read_ledger(path).entries) {
    json j = to_json(e);
    j.erase("started_at");
    j.erase("finished_at");
    rows.emplace_back(e.unit, j.dump());
  }
  std::sort(rows.begin(), rows.end());
  std::string out;
  for (const auto& [unit, line] : rows) out += line + "\n";
  return out;
}

std::vector<OutcomeRecord> outcome_records(const std::vector<LedgerEntry>& entries) {
  std::vector<OutcomeRecord> out;
  out.reserve(entries.size());
  for (const LedgerEntry& e : entries) {
    OutcomeRecord r;
    r.question_id = e.task + "/" + e.outcome.question_id;
    r.task = e.task;
    r.domain = e.domain;
    r.protocol = e.outcome.protocol;
    r.group_size = e.outcome.group_size;
    r.correct = e.outcome.correct;
    r.parse_failed = e.outcome.parse_failed;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace manbench
