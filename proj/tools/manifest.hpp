#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace bregdiag::cli {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;  // effective settings, flags applied
  std::uint64_t seed = 0;
  double timing_seconds = 0.0;

  /// FNV-1a over sorted key=value lines; stable under key reordering.
  std::string config_digest() const;
  std::string to_json() const;
  void write(const std::string& out_dir) const;
};

RunManifest read_manifest(const std::string& run_dir);

}  // namespace bregdiag::cli
