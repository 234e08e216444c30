#include "mmcyto/config.hpp"

#include <sstream>

#include "mmcyto/error.hpp"
#include "mmcyto/io.hpp"

namespace mmcyto {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::Parse, "config line " + std::to_string(n) + ": expected key=value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorCode::Parse, "config line " + std::to_string(n) + ": empty key");
    c.values_[key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::string& path) { return parse(read_file(path)); }

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
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const double d = std::stod(*v, &used);
    if (used == v->size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::Parse, "config " + key + ": not a number");
}

int Config::get_int(const std::string& key, int fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const int i = std::stoi(*v, &used);
    if (used == v->size()) return i;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::Parse, "config " + key + ": not an integer");
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

}  // namespace mmcyto
