#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "manbench/metrics.hpp"
#include "manbench/protocols.hpp"

namespace manbench {

struct LedgerEntry {
  std::string run_id;
  std::string config_digest;
  std::string unit;  // see unit_key
  std::string task;
  Domain domain = Domain::GeneralKnowledge;
  std::string subject_backend;
  std::string narrator_backend;
  std::string started_at;
  std::string finished_at;
  ProtocolOutcome outcome;
};

// "task/question_id/protocol/N"; N is 0 for B.
std::string unit_key(const std::string& task, const std::string& question_id, Protocol p,
                     int group_size);

nlohmann::json to_json(const LedgerEntry& e);
LedgerEntry ledger_entry_from_json(const nlohmann::json& j);

// Serializes appends from many workers; every entry is one line, flushed
// before append() returns.
class LedgerWriter {
 public:
  explicit LedgerWriter(const std::filesystem::path& path);
  void append(const LedgerEntry& e);
  std::size_t appended() const;

 private:
  mutable std::mutex mu_;
  std::ofstream out_;
  std::size_t appended_ = 0;
};

struct LedgerContents {
  std::vector<LedgerEntry> entries;
  std::size_t torn_bytes = 0;  // size of an incomplete trailing line, if any
};

// Reads every complete line. An unterminated last line (a write cut short)
// is skipped and reported; any other malformed line throws IoError.
LedgerContents read_ledger(const std::filesystem::path& path);

// Cuts an unterminated trailing line so appends start on a fresh line.
// Returns the number of bytes removed.
std::size_t repair_ledger(const std::filesystem::path& path);

std::set<std::string> completed_units(const std::vector<LedgerEntry>& entries);

// Timestamps removed, lines sorted by unit: the form compared across runs.
std::string canonicalize_ledger(const std::filesystem::path& path);

std::vector<OutcomeRecord> outcome_records(const std::vector<LedgerEntry>& entries);

}  // namespace manbench
