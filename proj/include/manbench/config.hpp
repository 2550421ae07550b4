#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "manbench/agents.hpp"
#include "manbench/protocols.hpp"

namespace manbench {

// How one side (subject or narrator) of a run talks to a model.
struct BackendSpec {
  std::string kind = "scripted";  // "scripted" | "live"
  // scripted: a policy name ("echo-baseline", ...) or a path to a script file
  std::string script = "echo-baseline";
  CompletionParams params;
  bool system_prompt = true;  // false for models that reject system turns
};

struct RunConfig {
  std::string run_id = "run";
  std::vector<std::filesystem::path> datasets;
  std::vector<Protocol> protocols{std::begin(kAllProtocols), std::end(kAllProtocols)};
  std::vector<int> group_sizes{5};
  BackendSpec subject;
  BackendSpec narrator;
  Defense defense = Defense::none;
  std::filesystem::path cache_dir;  // empty: no cache
  std::filesystem::path runs_dir = "runs";
  std::string base_url;  // live backends; MANBENCH_BASE_URL when empty
  int max_parallel = 4;
  std::uint64_t seed = 0;
  int cap = 0;  // per-task subsample cap; 0 keeps every question
  bool dry_run = false;

  std::filesystem::path run_dir() const { return runs_dir / run_id; }
  std::filesystem::path ledger_path() const { return run_dir() / "ledger.jsonl"; }
  std::filesystem::path snapshot_path() const { return run_dir() / "config.snapshot"; }
};

RunConfig default_config();

// Applies one "key = value" assignment; ConfigError on unknown keys or bad
// values. Lists are comma separated.
void set_option(RunConfig& c, const std::string& key, const std::string& value);

// Parses a config file body. Blank lines and lines starting with '#' are
// ignored.
RunConfig parse_config(std::string_view body, RunConfig base = default_config());
RunConfig load_config(const std::filesystem::path& path);

// Throws ConfigError when the config cannot be run.
void validate(const RunConfig& c);

// Every key in a fixed order, one "key = value" line each; parse_config of
// the result reproduces the config.
std::string render_config(const RunConfig& c);

// Digest over the keys that determine results (execution knobs such as
// max_parallel, cache_dir and dry_run are left out).
std::string config_digest(const RunConfig& c);

}  // namespace manbench
