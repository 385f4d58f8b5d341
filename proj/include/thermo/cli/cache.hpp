#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "thermo/core/errors.hpp"

namespace thermo::cli {

namespace fs = std::filesystem;

// Writes `content` to `path` through a temporary file and rename, so readers
// never observe a partial file.
inline void atomic_write(const fs::path& path, const std::string& content) {
  static std::atomic<unsigned long> counter{0};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ostringstream tmpname;
  tmpname << path.filename().string() << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "."
          << counter++;
  const fs::path tmp = path.parent_path() / tmpname.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

// Content-addressed result cache. Lookups are lock-free reads of complete
// files; writes are serialized and atomic.
class RunCache {
public:
  explicit RunCache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  // THERMO_CACHE_DIR, or none when unset.
  static std::optional<RunCache> from_env() {
    const char* d = std::getenv("THERMO_CACHE_DIR");
    if (!d || !*d) return std::nullopt;
    return RunCache(d);
  }

  const fs::path& dir() const { return dir_; }
  fs::path path_for(const std::string& key) const { return dir_ / (key + ".csv"); }

  std::optional<std::string> get(const std::string& key) const {
    std::ifstream in(path_for(key), std::ios::binary);
    if (!in) return std::nullopt;
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void put(const std::string& key, const std::string& content) {
    std::lock_guard<std::mutex> lock(*mu_);
    atomic_write(path_for(key), content);
  }

private:
  fs::path dir_;
  std::shared_ptr<std::mutex> mu_ = std::make_shared<std::mutex>();
};

} // namespace thermo::cli
