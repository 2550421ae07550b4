#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "manbench/config.hpp"
#include "manbench/ledger.hpp"
#include "manbench/metrics.hpp"
#include "manbench/sft.hpp"

namespace manbench {

// Runs fn(0..n-1) on at most `workers` threads. fn must not throw.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

// Loads every configured dataset, subsampled to config.cap when set.
std::vector<Question> load_questions(const RunConfig& c);

struct Unit {
  const Question* question = nullptr;
  Protocol protocol = Protocol::B;
  int group_size = 0;
  std::string key;
};

// Question-major order; B once per question, other protocols once per
// configured group size.
std::vector<Unit> plan_units(const RunConfig& c, const std::vector<Question>& questions);

// Subject and narrator backends for a run, cache-wrapped when a cache
// directory is configured. In dry-run mode both sides answer from an
// echo-baseline script and every request is printed to `dry_run_out`.
class BackendSet {
 public:
  BackendSet(const RunConfig& c, const std::vector<Question>& bank, std::ostream* dry_run_out = nullptr);
  ~BackendSet();

  Backend& subject();
  Backend& narrator();

 private:
  std::vector<std::unique_ptr<Backend>> owned_;
  Backend* subject_ = nullptr;
  Backend* narrator_ = nullptr;
};

struct RunOptions {
  // Stop handing out units once this many entries were appended (0: never).
  std::size_t stop_after = 0;
  // Terminate the process without cleanup once this many entries were
  // appended (0: never). Used to exercise crash recovery.
  std::size_t crash_after = 0;
  std::ostream* dry_run_out = nullptr;
};

struct RunSummary {
  std::filesystem::path ledger;
  std::size_t planned = 0;
  std::size_t skipped = 0;  // already in the ledger
  std::size_t completed = 0;
  std::vector<std::string> failed;  // "unit: reason"
  bool stopped = false;
  bool ok() const { return failed.empty() && !stopped; }
};

// Fresh run. Refuses to touch an existing non-empty ledger.
RunSummary run_experiment(const RunConfig& c, const RunOptions& options = {});

// Completes the missing units of runs_dir/run_id. When `requested` is given
// its digest must match the snapshot (ConfigMismatch otherwise); execution
// knobs (max_parallel, cache_dir) are taken from it.
RunSummary resume_experiment(const std::filesystem::path& runs_dir, const std::string& run_id,
                             const RunConfig* requested = nullptr, const RunOptions& options = {});

enum class ReportFormat { json, csv, markdown };
ReportFormat report_format_from_string(std::string_view s);

// Reads the run's ledger and writes report.{json,csv,md} into the run
// directory. MissingBaseline when influence outcomes exist without B.
MetricsReport write_reports(const std::filesystem::path& run_dir,
                            const std::vector<ReportFormat>& formats);

struct CurateSummary {
  std::size_t questions = 0;
  std::vector<std::filesystem::path> outputs;
  std::vector<std::string> failed;
};

// Fills every question's distractor using the narrator backend and writes
// the sibling ".curated.json" files.
CurateSummary curate(const RunConfig& c, bool allow_fallback = true, int max_retries = 2);

struct SftOptions {
  std::vector<Defense> defenses{Defense::anchoring, Defense::scrutiny};
  std::vector<Protocol> protocols{Protocol::GS, Protocol::RS};
  int group_size = 5;
  SftRatio ratio;
  std::filesystem::path out;  // default: run_dir/sft.jsonl
};

struct SftRunSummary {
  SftSummary emitted;
  std::filesystem::path out;
  std::vector<std::string> failed;
};

SftRunSummary generate_sft(const RunConfig& c, const SftOptions& options);

}  // namespace manbench
