#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "voteml/error.hpp"
#include "voteml/random.hpp"

namespace voteml {

/// Writes via a sibling temp file and rename, so readers never observe a
/// partially written file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tag = mix64(std::hash<std::string>{}(path.string()) ^
                         static_cast<std::uint64_t>(std::hash<std::string_view>{}(contents)));
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(tag % 1000000007ULL);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) fail(ErrorCode::Io, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    fail(ErrorCode::Io, "rename to " + path.string() + ": " + ec.message());
  }
}

}  // namespace voteml
