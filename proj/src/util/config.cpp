#include "levelset/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

#include "levelset/io.hpp"
#include "levelset/types.hpp"

namespace levelset {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

/// Drops a trailing # comment outside quotes.
std::string strip_comment(const std::string& line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

bool valid_key(const std::string& key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  return std::all_of(key.begin(), key.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
  });
}

std::vector<std::string> split_list(const std::string& raw) {
  std::string s = trim(raw);
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = s.find(',', start);
    out.push_back(unquote(trim(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start))));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      require(line.back() == ']', where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      require(section.empty() || valid_key(section), where + ": bad section name '" + section + "'");
      continue;
    }
    const std::size_t eq = line.find('=');
    require(eq != std::string::npos, where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    require(valid_key(key), where + ": bad key '" + key + "'");
    cfg.values_[section.empty() ? key : section + "." + key] = unquote(trim(line.substr(eq + 1)));
  }
  return cfg;
}

Config Config::load(const std::string& path) { return parse(read_file(path), path); }

void Config::apply_override(const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  require(eq != std::string::npos, "override must look like key=value: '" + assignment + "'");
  const std::string key = trim(assignment.substr(0, eq));
  require(valid_key(key), "bad override key '" + key + "'");
  values_[key] = unquote(trim(assignment.substr(eq + 1)));
}

std::optional<std::string> Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  return v ? parse_double(*v, key) : fallback;
}

long long Config::get_int(const std::string& key, long long fallback) const {
  const auto v = get(key);
  return v ? parse_int(*v, key) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  return v ? parse_bool(*v, key) : fallback;
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::vector<double> out;
  const auto v = get(key);
  if (!v) return out;
  for (const std::string& item : split_list(*v)) out.push_back(parse_double(item, key));
  return out;
}

std::vector<std::string> Config::get_strings(const std::string& key) const {
  const auto v = get(key);
  return v ? split_list(*v) : std::vector<std::string>{};
}

Config Config::subtree(const std::string& prefix) const {
  Config out;
  const std::string p = prefix + ".";
  for (const auto& [k, v] : values_) {
    if (k.compare(0, p.size(), p) == 0) out.values_[k.substr(p.size())] = v;
  }
  return out;
}

std::vector<std::string> Config::children(const std::string& prefix) const {
  std::set<std::string> names;
  const std::string p = prefix + ".";
  for (const auto& [k, v] : values_) {
    (void)v;
    if (k.compare(0, p.size(), p) != 0) continue;
    const std::string rest = k.substr(p.size());
    const std::size_t dot = rest.find('.');
    if (dot != std::string::npos) names.insert(rest.substr(0, dot));
  }
  return {names.begin(), names.end()};
}

Config Config::merged(const Config& other) const {
  Config out = *this;
  for (const auto& [k, v] : other.values_) out.values_[k] = v;
  return out;
}

double parse_double(const std::string& text, const std::string& what) {
  const std::string s = trim(text);
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  require(res.ec == std::errc() && res.ptr == s.data() + s.size() && !s.empty(),
          what + ": expected a number, got '" + text + "'");
  return x;
}

long long parse_int(const std::string& text, const std::string& what) {
  const std::string s = trim(text);
  long long x = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  require(res.ec == std::errc() && res.ptr == s.data() + s.size() && !s.empty(),
          what + ": expected an integer, got '" + text + "'");
  return x;
}

bool parse_bool(const std::string& text, const std::string& what) {
  std::string s = trim(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw InvalidArgument(what + ": expected a boolean, got '" + text + "'");
}

}  // namespace levelset
