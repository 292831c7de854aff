#include "manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include <json.hpp>

#include "lmpsh/errors.hpp"

namespace lmpsh::cli {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string RunManifest::config_hash() const { return hex64(fnv1a(config)); }

void RunManifest::write(const std::filesystem::path& dir) const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["argv"] = argv;
  j["config"] = config;
  j["config_hash"] = "fnv1a64:" + config_hash();
  if (seed) {
    j["seed"] = *seed;
  } else {
    j["seed"] = nullptr;
  }
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["timestamp"] = utc_timestamp();
  j["version"] = LMPSH_VERSION;
  if (!extra_json.empty()) j["details"] = nlohmann::ordered_json::parse(extra_json);
  const auto path = dir / "manifest.json";
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw DataError("cannot create output directory " + dir.string());
}

}  // namespace lmpsh::cli
