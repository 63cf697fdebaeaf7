#include "edm_cli/settings.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "edm/errors.hpp"

namespace edm::cli {
namespace {

std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || first == last) return std::nullopt;
  return v;
}

}  // namespace

Settings::Settings(nlohmann::json values) : values_(std::move(values)) {
  if (!values_.is_object()) throw ConfigError("config must be a JSON object with flat keys");
}

Settings Settings::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  nlohmann::json parsed;
  try {
    in >> parsed;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return Settings(std::move(parsed));
}

void Settings::overlay(const Settings& other) {
  for (auto it = other.values_.begin(); it != other.values_.end(); ++it) values_[it.key()] = it.value();
}

void Settings::set(const std::string& key, nlohmann::json value) { values_[key] = std::move(value); }

bool Settings::has(const std::string& key) const { return values_.contains(key); }

void Settings::require_known(const std::set<std::string>& allowed) const {
  for (auto it = values_.begin(); it != values_.end(); ++it) {
    if (!allowed.contains(it.key())) throw ConfigError(it.key() + ": unknown setting for this command");
  }
}

double Settings::number(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const auto& v = values_.at(key);
  std::optional<double> out;
  if (v.is_number()) out = v.get<double>();
  if (v.is_string()) out = to_double(v.get<std::string>());
  if (!out || !std::isfinite(*out)) throw ConfigError(key + ": expected a finite number, got " + v.dump());
  return *out;
}

std::uint64_t Settings::count(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const double v = number(key, 0.0);
  if (v < 0.0 || v != std::floor(v) || v > 1e15) {
    throw ConfigError(key + ": expected a non-negative integer, got " + values_.at(key).dump());
  }
  return static_cast<std::uint64_t>(v);
}

std::string Settings::text(const std::string& key, const std::string& fallback) const {
  return text(key).value_or(fallback);
}

std::optional<std::string> Settings::text(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  const auto& v = values_.at(key);
  if (!v.is_string()) throw ConfigError(key + ": expected a string, got " + v.dump());
  return v.get<std::string>();
}

std::optional<std::vector<double>> Settings::numbers(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  const auto& v = values_.at(key);
  std::vector<double> out;
  if (v.is_array()) {
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(key + ": expected an array of numbers");
      out.push_back(e.get<double>());
    }
  } else if (v.is_string()) {
    std::istringstream in(v.get<std::string>());
    std::string cell;
    while (std::getline(in, cell, ',')) {
      const auto first = cell.find_first_not_of(" \t");
      const auto last = cell.find_last_not_of(" \t");
      if (first != std::string::npos) cell = cell.substr(first, last - first + 1);
      const auto d = to_double(cell);
      if (!d) throw ConfigError(key + ": cannot parse '" + cell + "' as a number");
      out.push_back(*d);
    }
  } else {
    throw ConfigError(key + ": expected a comma-separated list of numbers");
  }
  if (out.empty()) throw ConfigError(key + ": list is empty");
  return out;
}

}  // namespace edm::cli
