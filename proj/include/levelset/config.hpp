#pragma once

// Key-value configuration files.
//
//   # comment
//   [teleport]
//   rho0 = 1000        -> key "teleport.rho0"
//
// Values may be quoted. Lists are comma separated, optionally inside [ ].

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace levelset {

class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<config>");
  static Config load(const std::string& path);

  /// Applies "key=value"; throws InvalidArgument on malformed input.
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::optional<std::string> get(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;

  /// Keys below `prefix.`, with the prefix stripped.
  Config subtree(const std::string& prefix) const;
  /// Distinct names N with some key "prefix.N.*", in sorted order.
  std::vector<std::string> children(const std::string& prefix) const;
  /// Layers `other` on top of this config.
  Config merged(const Config& other) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

double parse_double(const std::string& text, const std::string& what);
long long parse_int(const std::string& text, const std::string& what);
bool parse_bool(const std::string& text, const std::string& what);

}  // namespace levelset
