#include "manifest.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bregdiag/csv.hpp"

namespace bregdiag::cli {

std::string RunManifest::config_digest() const {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a 64 offset basis
  auto mix = [&h](const std::string& s) {
    for (const unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& [key, value] : config) {  // std::map iterates sorted
    mix(key);
    mix("=");
    mix(value);
    mix("\n");
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = config;
  j["config_digest"] = config_digest();
  j["seed"] = seed;
  j["tool_version"] = kToolVersion;
  j["timing_seconds"] = timing_seconds;
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& out_dir) const {
  write_text_file(out_dir + "/manifest.json", to_json());
}

RunManifest read_manifest(const std::string& run_dir) {
  const std::string path = run_dir + "/manifest.json";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing manifest: '" + path + "'");
  nlohmann::json j;
  in >> j;
  RunManifest m;
  m.command = j.value("command", "");
  m.seed = j.value("seed", std::uint64_t{0});
  m.timing_seconds = j.value("timing_seconds", 0.0);
  if (j.contains("config"))
    for (const auto& [key, value] : j["config"].items())
      m.config[key] = value.get<std::string>();
  return m;
}

}  // namespace bregdiag::cli
