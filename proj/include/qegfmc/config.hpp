#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "qegfmc/common.hpp"

namespace qegfmc {

/// Flat `key = value` settings. Keys are dotted (`gfmc.walkers`), `#` starts
/// a comment, and lists are comma separated.
class ConfigFile {
 public:
  ConfigFile() = default;

  static ConfigFile parse(std::istream& in) {
    ConfigFile c;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ParseError("expected 'key = value'", number);
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ParseError("empty key", number);
      if (c.values_.count(key)) throw ParseError("duplicate key '" + key + "'", number);
      c.values_[key] = value;
      c.lines_[key] = number;
    }
    return c;
  }

  static ConfigFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
      return parse(in);
    } catch (const ParseError& e) {
      throw ParseError(path + ": " + e.what(), e.line());
    }
  }

  /// Applies a `key=value` override.
  void set(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = trim(assignment.substr(0, eq));
    if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty key");
    values_[key] = trim(assignment.substr(eq + 1));
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get(const std::string& key, const std::string& fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::optional<std::string> find(const std::string& key) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::string require(const std::string& key) const {
    auto v = find(key);
    if (!v || v->empty()) throw ConfigError("missing required key '" + key + "'");
    return *v;
  }

  template <class T>
  T get_number(const std::string& key, T fallback) const {
    auto v = find(key);
    return v ? to_number<T>(key, *v) : fallback;
  }

  template <class T>
  std::optional<T> find_number(const std::string& key) const {
    auto v = find(key);
    if (!v) return std::nullopt;
    return to_number<T>(key, *v);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto v = find(key);
    if (!v) return fallback;
    std::string s = lower(*v);
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    throw ConfigError("key '" + key + "' expects a boolean, got '" + *v + "'");
  }

  std::vector<std::string> get_list(const std::string& key) const {
    std::vector<std::string> out;
    auto v = find(key);
    if (!v) return out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) throw ConfigError("key '" + key + "' has an empty list item");
      out.push_back(item);
    }
    return out;
  }

  template <class T>
  std::vector<T> get_number_list(const std::string& key, std::vector<T> fallback) const {
    auto items = get_list(key);
    if (items.empty()) return fallback;
    std::vector<T> out;
    for (const auto& s : items) out.push_back(to_number<T>(key, s));
    return out;
  }

  /// Keys present in the file that nothing asked for.
  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) out.push_back(k);
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
  }

 private:
  template <class T>
  static T to_number(const std::string& key, const std::string& text) {
    T value{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    // Allow 1e5 style integers.
    if constexpr (std::is_integral_v<T>) {
      double d = 0.0;
      auto [p, ec] = std::from_chars(first, last, d);
      if (ec != std::errc() || p != last || d != static_cast<double>(static_cast<long long>(d)))
        throw ConfigError("key '" + key + "' expects an integer, got '" + text + "'");
      if (d < static_cast<double>(std::numeric_limits<T>::lowest()) ||
          d > static_cast<double>(std::numeric_limits<T>::max()))
        throw ConfigError("key '" + key + "' is out of range: '" + text + "'");
      value = static_cast<T>(d);
    } else {
      auto [p, ec] = std::from_chars(first, last, value);
      if (ec != std::errc() || p != last) throw ConfigError("key '" + key + "' expects a number, got '" + text + "'");
    }
    return value;
  }

  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  mutable std::set<std::string> used_;
};

}  // namespace qegfmc
