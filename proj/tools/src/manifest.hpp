#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lmpsh::cli {

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text);

/// Provenance record written as manifest.json into every output directory.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::string config;  // effective configuration in TOML form, defaults included
  std::optional<std::uint64_t> seed;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string extra_json;  // optional JSON object embedded under "details"

  std::string config_hash() const;
  void write(const std::filesystem::path& dir) const;
};

/// Creates the directory when missing; DataError on failure.
void ensure_directory(const std::filesystem::path& dir);

}  // namespace lmpsh::cli
