#include <spdlog/spdlog.h>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "manbench/agents.hpp"
#include "manbench/error.hpp"
#include "manbench/text.hpp"

namespace manbench {

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());
}

std::filesystem::path ResponseCache::path_for(const std::string& key) const {
  // Two-level fan-out keeps directories small on long runs.
  return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  std::ifstream in(path_for(key));
  if (!in) return std::nullopt;
  try {
    auto doc = nlohmann::json::parse(in);
    return doc.at("response").get<std::string>();
  } catch (const std::exception& e) {
    spdlog::warn("ignoring unreadable cache entry {}: {}", key, e.what());
    return std::nullopt;
  }
}

void ResponseCache::put(const std::string& key, const std::string& response,
                        const std::string& model) const {
  static std::atomic<std::uint64_t> counter{0};
  std::filesystem::path final_path = path_for(key);
  std::filesystem::create_directories(final_path.parent_path());

  std::ostringstream tmp_name;
  tmp_name << key << ".tmp." << std::this_thread::get_id() << "." << counter++;
  std::filesystem::path tmp = final_path.parent_path() / tmp_name.str();

  nlohmann::json doc{{"response", response}, {"model", model}, {"timestamp", text::utc_timestamp()}};
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write cache entry " + tmp.string());
    out << doc.dump();
    if (!out) throw IoError("short write to cache entry " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, final_path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot install cache entry " + final_path.string());
  }
}

}  // namespace manbench
