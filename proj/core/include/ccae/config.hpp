#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ccae {

/// Flat `key = value` configuration. One entry per line, `#` starts a comment,
/// dotted keys group sub-configurations (`scenario.num_users = 2048`).
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.contains(key); }
  void set(const std::string& key, std::string value);
  const std::map<std::string, std::string>& entries() const { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback) const;

  /// Keys that were never read through a getter, for typo detection.
  std::vector<std::string> unused_keys() const;

  /// Canonical text: sorted keys, one `key = value` per line.
  std::string to_string() const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> used_;
};

std::vector<std::string> split(std::string_view text, char sep);
std::string trim(std::string_view text);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace ccae
