#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "prescreen/error.hpp"

namespace prescreen::io {

namespace fs = std::filesystem;

/// Environment variable that relocates relative output paths.
inline constexpr const char* kOutDirEnv = "PRESCREEN_OUT_DIR";

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io.Unreadable", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes `content` to a sibling temp file, then renames it over `path`.
/// Readers never observe a partial file.
inline void atomic_write(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io.Unwritable", "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("io.Unwritable", "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("io.Unwritable", "cannot rename onto " + path.string() + ": " + ec.message());
  }
}

/// Output location for `path`: absolute paths are kept; relative ones are
/// placed under `out_dir` when it is nonempty.
inline fs::path resolve_output(const std::string& path, const std::string& out_dir) {
  const fs::path p(path);
  if (p.is_absolute() || out_dir.empty()) return p;
  return fs::path(out_dir) / p;
}

inline std::string env_out_dir() {
  const char* v = std::getenv(kOutDirEnv);
  return v == nullptr ? std::string{} : std::string(v);
}

}  // namespace prescreen::io
