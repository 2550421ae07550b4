#include "manbench/runner.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include "manbench/error.hpp"
#include "manbench/scripted.hpp"
#include "manbench/text.hpp"

namespace manbench {

namespace {

// Prints each request, then answers it from an offline script.
class DryRunBackend : public Backend {
 public:
  DryRunBackend(std::string side, std::vector<Question> bank, std::ostream& out)
      : side_(std::move(side)), inner_(policy_script(ScriptPolicy::echo_baseline), std::move(bank)),
        out_(out) {}

  std::string complete(std::span<const ChatTurn> messages, const CompletionParams& params) override {
    std::string agent = side_;
    if (auto it = params.extra.find(std::string(kAgentTag)); it != params.extra.end())
      if (auto s = std::get_if<std::string>(&it->second)) agent = *s;
    std::string reply = inner_.complete(messages, params);
    std::lock_guard lock(mu_);
    out_ << "===== " << side_ << " request (" << agent << ", model " << params.model << ")\n";
    for (const ChatTurn& t : messages) out_ << "[" << to_string(t.role) << "]\n" << t.content << "\n";
    out_ << "\n";
    return reply;
  }
  std::string id() const override { return "dry-run"; }

 private:
  std::string side_;
  ScriptedBackend inner_;
  std::ostream& out_;
  std::mutex mu_;
};

std::unique_ptr<Backend> make_backend(const BackendSpec& spec, const RunConfig& c,
                                      const std::vector<Question>& bank) {
  if (spec.kind == "live") {
    LiveConfig lc;
    lc.base_url = c.base_url;
    lc = live_config_from_env(lc);
    return std::make_unique<LiveBackend>(lc);
  }
  Script script;
  try {
    script = policy_script(script_policy_from_string(spec.script));
  } catch (const std::invalid_argument&) {
    script = load_script(spec.script);
  }
  return std::make_unique<ScriptedBackend>(std::move(script), bank);
}

void prepare_run_dir(const RunConfig& c) {
  std::filesystem::create_directories(c.run_dir());
  std::string tmp = c.snapshot_path().string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + tmp);
    f << "# config digest " << config_digest(c) << "\n" << render_config(c);
  }
  std::filesystem::rename(tmp, c.snapshot_path());
}

RunConfig absolutized(RunConfig c) {
  for (auto& d : c.datasets) d = std::filesystem::absolute(d).lexically_normal();
  return c;
}

RunSummary execute(const RunConfig& c, const RunOptions& options) {
  std::vector<Question> questions = load_questions(c);
  std::vector<Unit> units = plan_units(c, questions);
  std::ostream* echo = options.dry_run_out ? options.dry_run_out : &std::cout;
  BackendSet backends(c, questions, c.dry_run ? echo : nullptr);

  RunSummary summary;
  summary.ledger = c.ledger_path();
  summary.planned = units.size();

  std::set<std::string> done;
  std::unique_ptr<LedgerWriter> writer;
  if (!c.dry_run) {
    if (std::size_t cut = repair_ledger(c.ledger_path()))
      spdlog::warn("dropped {} bytes of an incomplete ledger line", cut);
    done = completed_units(read_ledger(c.ledger_path()).entries);
    writer = std::make_unique<LedgerWriter>(c.ledger_path());
  }

  std::vector<const Unit*> todo;
  for (const Unit& u : units) {
    if (done.count(u.key)) ++summary.skipped;
    else todo.push_back(&u);
  }
  spdlog::info("run {}: {} units planned, {} already done, {} to go", c.run_id, units.size(),
               summary.skipped, todo.size());

  const std::string digest = config_digest(c);
  const std::string subject_id = backends.subject().id();
  const std::string narrator_id = backends.narrator().id();
  ProtocolParams params{c.subject.params, c.narrator.params};

  std::mutex mu;
  std::atomic<bool> stop{false};
  std::atomic<std::size_t> completed{0};

  parallel_for(todo.size(), c.max_parallel, [&](std::size_t i) {
    if (stop.load()) return;
    const Unit& u = *todo[i];
    const Question& q = *u.question;
    LedgerEntry e;
    e.run_id = c.run_id;
    e.config_digest = digest;
    e.unit = u.key;
    e.task = q.task;
    e.domain = q.domain;
    e.subject_backend = subject_id;
    e.narrator_backend = narrator_id;
    e.started_at = text::utc_timestamp();
    try {
      if (u.protocol == Protocol::B || c.defense == Defense::none)
        e.outcome = run_protocol(u.protocol, q, u.group_size, backends.subject(), backends.narrator(), params);
      else
        e.outcome = run_defended_protocol(c.defense, u.protocol, q, u.group_size, backends.subject(),
                                          backends.narrator(), params);
    } catch (const std::exception& ex) {
      spdlog::error("unit {} failed: {}", u.key, ex.what());
      std::lock_guard lock(mu);
      summary.failed.push_back(u.key + ": " + ex.what());
      return;
    }
    e.finished_at = text::utc_timestamp();
    if (!writer) {
      ++completed;
      return;
    }
    writer->append(e);
    std::size_t n = ++completed;
    if (options.crash_after && n >= options.crash_after) std::_Exit(75);
    if (options.stop_after && n >= options.stop_after) stop = true;
  });

  summary.completed = completed.load();
  summary.stopped = stop.load() && summary.skipped + summary.completed + summary.failed.size() < units.size();
  std::sort(summary.failed.begin(), summary.failed.end());
  return summary;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::string tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + tmp);
    f << body;
    if (!f) throw IoError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  if (threads == 1) {
    loop();
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(loop);
}

std::vector<Question> load_questions(const RunConfig& c) {
  std::vector<Question> all;
  std::set<std::string> seen;
  for (const auto& path : c.datasets) {
    std::vector<Question> qs = load_task(path);
    if (c.cap > 0) qs = subsample(qs, static_cast<std::size_t>(c.cap), c.seed);
    for (Question& q : qs) {
      if (!seen.insert(q.task + "/" + q.id).second)
        throw ConfigError(fmt::format("question {}/{} appears in more than one dataset", q.task, q.id));
      all.push_back(std::move(q));
    }
  }
  return all;
}

std::vector<Unit> plan_units(const RunConfig& c, const std::vector<Question>& questions) {
  std::vector<Unit> units;
  for (const Question& q : questions) {
    for (Protocol p : c.protocols) {
      if (p == Protocol::B) {
        units.push_back({&q, p, 0, unit_key(q.task, q.id, p, 0)});
        continue;
      }
      for (int n : c.group_sizes) units.push_back({&q, p, n, unit_key(q.task, q.id, p, n)});
    }
  }
  return units;
}

BackendSet::BackendSet(const RunConfig& c, const std::vector<Question>& bank, std::ostream* dry_run_out) {
  if (dry_run_out) {
    owned_.push_back(std::make_unique<DryRunBackend>("subject", bank, *dry_run_out));
    owned_.push_back(std::make_unique<DryRunBackend>("narrator", bank, *dry_run_out));
    subject_ = owned_[0].get();
    narrator_ = owned_[1].get();
    return;
  }
  owned_.push_back(make_backend(c.subject, c, bank));
  owned_.push_back(make_backend(c.narrator, c, bank));
  subject_ = owned_[0].get();
  narrator_ = owned_[1].get();
  if (!c.cache_dir.empty()) {
    owned_.push_back(std::make_unique<CachingBackend>(*subject_, ResponseCache(c.cache_dir)));
    subject_ = owned_.back().get();
    owned_.push_back(std::make_unique<CachingBackend>(*narrator_, ResponseCache(c.cache_dir)));
    narrator_ = owned_.back().get();
  }
}

BackendSet::~BackendSet() {
  // Wrappers hold references to the inner backends; drop them first.
  while (!owned_.empty()) owned_.pop_back();
}

Backend& BackendSet::subject() { return *subject_; }
Backend& BackendSet::narrator() { return *narrator_; }

RunSummary run_experiment(const RunConfig& config, const RunOptions& options) {
  RunConfig c = absolutized(config);
  validate(c);
  if (!c.dry_run) {
    if (std::filesystem::exists(c.ledger_path()) && std::filesystem::file_size(c.ledger_path()) > 0)
      throw ConfigError("run " + c.run_id + " already has a ledger; use resume");
    prepare_run_dir(c);
  }
  return execute(c, options);
}

RunSummary resume_experiment(const std::filesystem::path& runs_dir, const std::string& run_id,
                             const RunConfig* requested, const RunOptions& options) {
  std::filesystem::path snapshot = runs_dir / run_id / "config.snapshot";
  if (!std::filesystem::exists(snapshot)) throw IoError("no config snapshot at " + snapshot.string());
  RunConfig c = load_config(snapshot);
  c.runs_dir = runs_dir;
  if (requested) {
    RunConfig r = absolutized(*requested);
    if (config_digest(r) != config_digest(c))
      throw ConfigMismatch("configuration differs from the snapshot of run " + run_id);
    c.max_parallel = r.max_parallel;
    c.cache_dir = r.cache_dir;
  }
  for (const LedgerEntry& e : read_ledger(c.ledger_path()).entries)
    if (e.config_digest != config_digest(c))
      throw ConfigMismatch("ledger of run " + run_id + " was written under another configuration");
  validate(c);
  return execute(c, options);
}

ReportFormat report_format_from_string(std::string_view s) {
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  if (s == "markdown" || s == "md") return ReportFormat::markdown;
  throw std::invalid_argument("unknown report format: " + std::string(s));
}

MetricsReport write_reports(const std::filesystem::path& run_dir,
                            const std::vector<ReportFormat>& formats) {
  LedgerContents ledger = read_ledger(run_dir / "ledger.jsonl");
  if (ledger.entries.empty()) throw IoError("no ledger entries under " + run_dir.string());
  std::vector<OutcomeRecord> records = outcome_records(ledger.entries);

  bool has_baseline = false, has_influence = false;
  for (const OutcomeRecord& r : records) (r.protocol == Protocol::B ? has_baseline : has_influence) = true;
  if (has_influence && !has_baseline)
    throw MissingBaseline("reality shift needs B outcomes; none in " + run_dir.string());

  std::string model = "model";
  int group_size = 0;
  if (std::filesystem::exists(run_dir / "config.snapshot")) {
    RunConfig c = load_config(run_dir / "config.snapshot");
    model = c.subject.params.model;
    // Headline numbers at N=5 when it was run; per_group_size has the rest.
    const auto& sizes = c.group_sizes;
    group_size = std::find(sizes.begin(), sizes.end(), 5) != sizes.end() ? 5 : sizes.front();
  }
  if (group_size == 0) {
    std::set<int> sizes;
    for (const OutcomeRecord& r : records)
      if (r.protocol != Protocol::B) sizes.insert(r.group_size);
    if (sizes.size() > 1) group_size = sizes.count(5) ? 5 : *sizes.begin();
  }
  MetricsReport report = build_report(records, group_size, model);
  for (ReportFormat f : formats) {
    switch (f) {
      case ReportFormat::json: write_file(run_dir / "report.json", to_json(report).dump(2) + "\n"); break;
      case ReportFormat::csv: write_file(run_dir / "report.csv", to_csv(report)); break;
      case ReportFormat::markdown: write_file(run_dir / "report.md", to_markdown(report)); break;
    }
  }
  return report;
}

CurateSummary curate(const RunConfig& config, bool allow_fallback, int max_retries) {
  RunConfig c = absolutized(config);
  if (c.datasets.empty()) throw ConfigError("no datasets configured");
  CurateSummary summary;
  for (const auto& path : c.datasets) {
    std::vector<Question> qs = load_task(path);
    if (c.cap > 0) qs = subsample(qs, static_cast<std::size_t>(c.cap), c.seed);
    BackendSet backends(c, qs);
    std::mutex mu;
    std::vector<std::string> failed;
    parallel_for(qs.size(), c.max_parallel, [&](std::size_t i) {
      Question& q = qs[i];
      try {
        q.distractor_label = select_distractor(q, backends.narrator(), c.narrator.params, max_retries,
                                               allow_fallback);
      } catch (const std::exception& ex) {
        std::lock_guard lock(mu);
        failed.push_back(q.task + "/" + q.id + ": " + ex.what());
      }
    });
    std::sort(failed.begin(), failed.end());
    summary.questions += qs.size();
    summary.failed.insert(summary.failed.end(), failed.begin(), failed.end());
    if (!failed.empty()) continue;
    std::filesystem::path out = curated_path(path);
    save_task(out, qs);
    summary.outputs.push_back(out);
  }
  return summary;
}

SftRunSummary generate_sft(const RunConfig& config, const SftOptions& options) {
  RunConfig c = absolutized(config);
  validate(c);
  std::vector<Question> questions = load_questions(c);
  BackendSet backends(c, questions);
  ProtocolParams params{c.subject.params, c.narrator.params};

  // One slot per question keeps the record order independent of scheduling.
  std::vector<std::vector<SftRecord>> slots(questions.size());
  std::vector<std::string> failed;
  std::mutex mu;
  parallel_for(questions.size(), c.max_parallel, [&](std::size_t i) {
    const Question& q = questions[i];
    try {
      ProtocolOutcome base = run_protocol(Protocol::B, q, 0, backends.subject(), backends.narrator(), params);
      for (Defense d : options.defenses) {
        for (Protocol p : options.protocols) {
          ProtocolOutcome o = run_defended_protocol(d, p, q, options.group_size, backends.subject(),
                                                    backends.narrator(), params);
          if (auto r = build_resilience_record(o, q)) slots[i].push_back(std::move(*r));
        }
      }
      SftKind kind = base.correct ? SftKind::enriching : SftKind::corrective;
      slots[i].push_back(build_cooperative_record(kind, q, base, backends.narrator(), c.narrator.params,
                                                  options.group_size));
    } catch (const std::exception& ex) {
      std::lock_guard lock(mu);
      failed.push_back(q.task + "/" + q.id + ": " + ex.what());
    }
  });

  std::vector<SftRecord> records;
  for (auto& slot : slots)
    for (auto& r : slot) records.push_back(std::move(r));

  SftRunSummary summary;
  summary.out = options.out.empty() ? c.run_dir() / "sft.jsonl" : options.out;
  std::sort(failed.begin(), failed.end());
  summary.failed = std::move(failed);
  summary.emitted = emit_sft_dataset(records, summary.out, options.ratio, c.seed);
  return summary;
}

}  // namespace manbench
