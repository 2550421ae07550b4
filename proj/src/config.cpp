#include "manbench/config.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <sstream>

#include "manbench/error.hpp"
#include "manbench/text.hpp"

namespace manbench {

namespace {

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = text::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(fmt::format("{}: '{}' is not a number", key, v));
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("{}: '{}' is not a number", key, v));
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  std::string l = text::to_lower(v);
  if (l == "true" || l == "1" || l == "yes") return true;
  if (l == "false" || l == "0" || l == "no") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, v));
}

bool set_backend(BackendSpec& b, const std::string& field, const std::string& key,
                 const std::string& v) {
  if (field == "backend") {
    if (v != "scripted" && v != "live") throw ConfigError(key + ": expected scripted or live");
    b.kind = v;
  } else if (field == "script") {
    b.script = v;
  } else if (field == "model") {
    b.params.model = v;
  } else if (field == "temperature") {
    b.params.temperature = parse_real(key, v);
  } else if (field == "max_tokens") {
    b.params.max_tokens = parse_number<int>(key, v);
  } else if (field == "system_prompt") {
    b.system_prompt = parse_bool(key, v);
  } else {
    return false;
  }
  return true;
}

template <typename T, typename F>
std::string join_map(const std::vector<T>& xs, F f) {
  std::string out;
  for (const T& x : xs) {
    if (!out.empty()) out += ",";
    out += f(x);
  }
  return out;
}

std::string render_backend(const std::string& side, const BackendSpec& b) {
  return fmt::format("{0}_backend = {1}\n{0}_script = {2}\n{0}_model = {3}\n{0}_temperature = {4}\n"
                     "{0}_max_tokens = {5}\n{0}_system_prompt = {6}\n",
                     side, b.kind, b.script, b.params.model, b.params.temperature,
                     b.params.max_tokens, b.system_prompt);
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  c.subject.params.model = "scripted";
  c.subject.params.temperature = 0.0;
  c.narrator.params.model = "scripted";
  c.narrator.params.temperature = 0.7;
  return c;
}

void set_option(RunConfig& c, const std::string& key, const std::string& value) {
  const std::string v = text::trim(value);
  if (key == "run_id") {
    if (v.empty() || v.find('/') != std::string::npos || v == "." || v == "..")
      throw ConfigError("run_id must be a plain directory name");
    c.run_id = v;
  } else if (key == "datasets") {
    c.datasets.clear();
    for (const std::string& p : split_list(v)) c.datasets.emplace_back(p);
  } else if (key == "protocols") {
    c.protocols.clear();
    try {
      for (const std::string& p : split_list(v)) c.protocols.push_back(protocol_from_string(p));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("protocols: ") + e.what());
    }
  } else if (key == "group_size" || key == "group_sizes") {
    c.group_sizes.clear();
    for (const std::string& n : split_list(v)) c.group_sizes.push_back(parse_number<int>(key, n));
  } else if (key == "defense") {
    try {
      c.defense = defense_from_string(v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("defense: ") + e.what());
    }
  } else if (key == "cache_dir") {
    c.cache_dir = v;
  } else if (key == "runs_dir") {
    c.runs_dir = v;
  } else if (key == "base_url") {
    c.base_url = v;
  } else if (key == "max_parallel") {
    c.max_parallel = parse_number<int>(key, v);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, v);
  } else if (key == "cap") {
    c.cap = parse_number<int>(key, v);
  } else if (key == "dry_run") {
    c.dry_run = parse_bool(key, v);
  } else if (key.rfind("subject_", 0) == 0 && set_backend(c.subject, key.substr(8), key, v)) {
  } else if (key.rfind("narrator_", 0) == 0 && set_backend(c.narrator, key.substr(9), key, v)) {
  } else {
    throw ConfigError("unknown config key: " + key);
  }
}

RunConfig parse_config(std::string_view body, RunConfig base) {
  int lineno = 0;
  for (const std::string& raw : text::split_lines(body)) {
    ++lineno;
    std::string line = text::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected key = value", lineno));
    set_option(base, text::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig c = parse_config(ss.str());
  // Relative dataset paths are relative to the config file.
  for (auto& d : c.datasets)
    if (d.is_relative()) d = path.parent_path() / d;
  return c;
}

void validate(const RunConfig& c) {
  if (c.datasets.empty()) throw ConfigError("no datasets configured");
  if (c.protocols.empty()) throw ConfigError("no protocols configured");
  if (c.group_sizes.empty()) throw ConfigError("no group size configured");
  for (int n : c.group_sizes)
    if (n < 1) throw ConfigError("group sizes must be at least 1");
  if (c.max_parallel < 1) throw ConfigError("max_parallel must be at least 1");
  if (c.cap < 0) throw ConfigError("cap must not be negative");
  try {
    manbench::validate(c.subject.params);
    manbench::validate(c.narrator.params);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  bool long_term = false;
  for (Protocol p : c.protocols) long_term |= is_long_term(p);
  // The memory stage puts a system prompt in front of the subject.
  if (long_term && !c.subject.system_prompt)
    throw ConfigError("GL/RL need a subject that accepts a system prompt");
}

std::string render_config(const RunConfig& c) {
  std::string out;
  out += fmt::format("run_id = {}\n", c.run_id);
  out += fmt::format("datasets = {}\n",
                     join_map(c.datasets, [](const std::filesystem::path& p) { return p.string(); }));
  out += fmt::format("protocols = {}\n",
                     join_map(c.protocols, [](Protocol p) { return std::string(to_string(p)); }));
  out += fmt::format("group_sizes = {}\n", join_map(c.group_sizes, [](int n) { return std::to_string(n); }));
  out += render_backend("subject", c.subject);
  out += render_backend("narrator", c.narrator);
  out += fmt::format("defense = {}\n", to_string(c.defense));
  out += fmt::format("base_url = {}\n", c.base_url);
  out += fmt::format("seed = {}\n", c.seed);
  out += fmt::format("cap = {}\n", c.cap);
  out += fmt::format("runs_dir = {}\n", c.runs_dir.string());
  out += fmt::format("cache_dir = {}\n", c.cache_dir.string());
  out += fmt::format("max_parallel = {}\n", c.max_parallel);
  return out;
}

std::string config_digest(const RunConfig& c) {
  RunConfig d = c;
  d.max_parallel = 1;
  d.cache_dir.clear();
  d.runs_dir.clear();
  d.dry_run = false;
  return text::sha256_hex(render_config(d));
}

}  // namespace manbench
