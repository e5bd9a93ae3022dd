#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bregdiag::cli {

/// Flat key = value configuration file. Lines starting with '#' and blank
/// lines are ignored; inline comments after '#' are stripped.
class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::string& path);
  static KeyValueConfig from_string(const std::string& text, const std::string& origin = "config");

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<int> get_ints(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;

  /// Keys in sorted order; the manifest digest hashes these.
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  std::string origin_ = "config";
  std::map<std::string, std::string> values_;
};

}  // namespace bregdiag::cli
