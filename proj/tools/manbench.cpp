// manbench command line: curate, run, resume, report, defend, sft-gen.
#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>

#include "manbench/error.hpp"
#include "manbench/runner.hpp"

using namespace manbench;

namespace {

struct Globals {
  std::string config;
  std::string cache_dir;
  std::string runs_dir;
  int max_parallel = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool dry_run = false;
  std::vector<std::string> sets;
  std::string log_level = "info";
};

RunConfig build_config(const Globals& g) {
  RunConfig c = g.config.empty() ? default_config() : load_config(g.config);
  for (const std::string& kv : g.sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + kv);
    set_option(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!g.cache_dir.empty()) c.cache_dir = g.cache_dir;
  if (!g.runs_dir.empty()) c.runs_dir = g.runs_dir;
  if (g.max_parallel > 0) c.max_parallel = g.max_parallel;
  if (g.seed_set) c.seed = g.seed;
  if (g.dry_run) c.dry_run = true;
  return c;
}

std::vector<ReportFormat> formats_of(const std::vector<std::string>& names) {
  std::vector<ReportFormat> out;
  for (const std::string& n : names) out.push_back(report_format_from_string(n));
  return out;
}

int finish_run(const RunSummary& s, const RunConfig& c, const std::vector<std::string>& report,
               bool dry_run) {
  fmt::print("ledger: {}\nunits: {} planned, {} already done, {} completed, {} failed\n",
             s.ledger.string(), s.planned, s.skipped, s.completed, s.failed.size());
  for (const std::string& f : s.failed) fmt::print("  failed {}\n", f);
  if (dry_run) return s.failed.empty() ? 0 : 1;
  int status = s.ok() ? 0 : 1;
  if (!report.empty()) {
    try {
      write_reports(c.run_dir(), formats_of(report));
      fmt::print("reports written to {}\n", c.run_dir().string());
    } catch (const std::exception& e) {
      spdlog::error("report: {}", e.what());
      status = 1;
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collective false-memory benchmark for multi-agent LLM systems"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Run configuration file (key = value lines)");
  app.add_option("--cache-dir", g.cache_dir, "Response cache directory");
  app.add_option("--runs-dir", g.runs_dir, "Directory holding runs/<run_id>");
  app.add_option("--max-parallel", g.max_parallel, "Units in flight at once")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Seed for subsampling and shuffles")
      ->each([&](const std::string&) { g.seed_set = true; });
  app.add_flag("--dry-run", g.dry_run, "Print prompts; no backend calls, no ledger");
  app.add_option("--set", g.sets, "Override one config key (key=value), repeatable");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error"}));

  // curate
  auto* curate_cmd = app.add_subcommand("curate", "Select a primary distractor for every question");
  bool no_fallback = false;
  int max_retries = 2;
  std::vector<std::string> curate_inputs;
  curate_cmd->add_option("datasets", curate_inputs, "Dataset files (override the config)");
  curate_cmd->add_flag("--no-fallback", no_fallback, "Fail instead of the edit-distance fallback");
  curate_cmd->add_option("--max-retries", max_retries, "Re-asks after an unparseable reply");

  // run / defend share their options
  std::string run_id;
  std::vector<std::string> report_formats{"json", "csv", "markdown"};
  bool no_report = false;
  std::size_t crash_after = 0;
  std::string defense_name;
  auto add_run_options = [&](CLI::App* cmd) {
    cmd->add_option("--run-id", run_id, "Run identifier");
    cmd->add_option("--report", report_formats, "Report formats to write at the end")
        ->check(CLI::IsMember({"json", "csv", "markdown", "md"}));
    cmd->add_flag("--no-report", no_report, "Skip report generation");
    cmd->add_option("--crash-after", crash_after, "Exit abruptly after N ledger appends (testing)")
        ->group("");
  };
  auto* run_cmd = app.add_subcommand("run", "Run the configured protocols");
  add_run_options(run_cmd);
  run_cmd->add_option("--defense", defense_name, "none, anchoring or scrutiny")
      ->check(CLI::IsMember({"none", "anchoring", "scrutiny"}));
  auto* defend_cmd = app.add_subcommand("defend", "Run the configured protocols under a defense");
  add_run_options(defend_cmd);
  defend_cmd->add_option("--defense", defense_name, "anchoring or scrutiny")
      ->required()
      ->check(CLI::IsMember({"anchoring", "scrutiny"}));

  auto* resume_cmd = app.add_subcommand("resume", "Complete the missing units of a run");
  resume_cmd->add_option("--run-id", run_id, "Run identifier")->required();
  resume_cmd->add_option("--report", report_formats, "Report formats to write at the end")
      ->check(CLI::IsMember({"json", "csv", "markdown", "md"}));
  resume_cmd->add_flag("--no-report", no_report, "Skip report generation");
  resume_cmd->add_option("--crash-after", crash_after, "Exit abruptly after N ledger appends (testing)")
      ->group("");

  auto* report_cmd = app.add_subcommand("report", "Compute metrics from a run ledger");
  report_cmd->add_option("--run-id", run_id, "Run identifier")->required();
  report_cmd->add_option("--format", report_formats, "json, csv, markdown")
      ->check(CLI::IsMember({"json", "csv", "markdown", "md"}));

  auto* sft_cmd = app.add_subcommand("sft-gen", "Generate the resilience + cooperative SFT set");
  std::string ratio = "1:1";
  std::string sft_out;
  std::vector<std::string> sft_defenses{"anchoring", "scrutiny"};
  std::vector<std::string> sft_protocols{"GS", "RS"};
  sft_cmd->add_option("--ratio", ratio, "resilience:cooperative");
  sft_cmd->add_option("--out", sft_out, "Output JSONL (default runs/<run_id>/sft.jsonl)");
  sft_cmd->add_option("--defenses", sft_defenses, "Defenses producing resilience chains")
      ->check(CLI::IsMember({"anchoring", "scrutiny"}));
  sft_cmd->add_option("--protocols", sft_protocols, "Influence protocols for resilience chains")
      ->check(CLI::IsMember({"GS", "GL", "RS", "RL"}));
  sft_cmd->add_option("--run-id", run_id, "Run identifier");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("manbench"));
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    if (*curate_cmd) {
      RunConfig c = build_config(g);
      if (!curate_inputs.empty()) {
        c.datasets.clear();
        for (const std::string& p : curate_inputs) c.datasets.emplace_back(p);
      }
      CurateSummary s = curate(c, !no_fallback, max_retries);
      fmt::print("curated {} questions\n", s.questions);
      for (const auto& p : s.outputs) fmt::print("  wrote {}\n", p.string());
      for (const std::string& f : s.failed) fmt::print("  failed {}\n", f);
      return s.failed.empty() ? 0 : 1;
    }

    if (*run_cmd || *defend_cmd) {
      RunConfig c = build_config(g);
      if (!run_id.empty()) c.run_id = run_id;
      if (!defense_name.empty()) c.defense = defense_from_string(defense_name);
      RunOptions opts;
      opts.crash_after = crash_after;
      opts.dry_run_out = &std::cout;
      RunSummary s = run_experiment(c, opts);
      return finish_run(s, c, no_report ? std::vector<std::string>{} : report_formats, c.dry_run);
    }

    if (*resume_cmd) {
      RunConfig requested = build_config(g);
      requested.run_id = run_id;
      std::filesystem::path runs_dir = requested.runs_dir;
      RunOptions opts;
      opts.crash_after = crash_after;
      RunSummary s = resume_experiment(runs_dir, run_id, g.config.empty() ? nullptr : &requested, opts);
      RunConfig c = requested;
      c.run_id = run_id;
      return finish_run(s, c, no_report ? std::vector<std::string>{} : report_formats, false);
    }

    if (*report_cmd) {
      RunConfig c = build_config(g);
      c.run_id = run_id;
      MetricsReport r = write_reports(c.run_dir(), formats_of(report_formats));
      fmt::print("{}", to_markdown(r));
      return 0;
    }

    if (*sft_cmd) {
      RunConfig c = build_config(g);
      if (!run_id.empty()) c.run_id = run_id;
      SftOptions o;
      o.ratio = parse_sft_ratio(ratio);
      o.out = sft_out;
      o.group_size = c.group_sizes.front();
      o.defenses.clear();
      for (const std::string& d : sft_defenses) o.defenses.push_back(defense_from_string(d));
      o.protocols.clear();
      for (const std::string& p : sft_protocols) o.protocols.push_back(protocol_from_string(p));
      SftRunSummary s = generate_sft(c, o);
      fmt::print("wrote {} lines to {} ({} resilience, {} corrective, {} enriching{})\n",
                 s.emitted.lines(), s.out.string(), s.emitted.resilience_out, s.emitted.corrective_out,
                 s.emitted.enriching_out, s.emitted.downsampled ? ", down-sampled" : "");
      for (const std::string& f : s.failed) fmt::print("  failed {}\n", f);
      return s.failed.empty() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
