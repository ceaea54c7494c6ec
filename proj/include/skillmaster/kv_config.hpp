#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace skillmaster {

// Flat `key = value` document. Blank lines and lines starting with '#' are
// ignored; later keys override earlier ones.
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig parse(const std::string& text);
  static KvConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.contains(key); }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Comma-separated list, whitespace trimmed, empty entries dropped.
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  // Canonical rendering: sorted keys, one `key = value` per line.
  std::string dump() const;

 private:
  std::map<std::string, std::string> values_;
};

std::string trim(const std::string& s);
std::vector<std::string> split_list(const std::string& s, char sep = ',');

}  // namespace skillmaster
