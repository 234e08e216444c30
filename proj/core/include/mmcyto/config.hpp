#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mmcyto {

/// `key = value` lines; `#` starts a comment; blank lines are ignored.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }
  [[nodiscard]] std::optional<std::string> get(const std::string& key) const;
  [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
  [[nodiscard]] double get_double(const std::string& key, double fallback) const;
  [[nodiscard]] int get_int(const std::string& key, int fallback) const;
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  [[nodiscard]] std::vector<std::string> keys() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace mmcyto
