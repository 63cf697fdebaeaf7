#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace edm::cli {

/// Flat key/value experiment settings: a JSON config file overlaid with
/// command-line flags. Values may be JSON numbers or strings holding numbers;
/// typed getters report the offending key on failure.
class Settings {
 public:
  Settings() = default;
  explicit Settings(nlohmann::json values);

  /// Loads a JSON object from `path`. Throws ConfigError.
  static Settings from_file(const std::filesystem::path& path);

  /// Copies every key of `other` over this one.
  void overlay(const Settings& other);
  void set(const std::string& key, nlohmann::json value);
  bool has(const std::string& key) const;

  /// Throws ConfigError naming the first key not in `allowed`.
  void require_known(const std::set<std::string>& allowed) const;

  double number(const std::string& key, double fallback) const;
  std::uint64_t count(const std::string& key, std::uint64_t fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  std::optional<std::string> text(const std::string& key) const;
  /// Comma-separated numbers or a JSON array.
  std::optional<std::vector<double>> numbers(const std::string& key) const;

  const nlohmann::json& values() const noexcept { return values_; }

 private:
  nlohmann::json values_ = nlohmann::json::object();
};

}  // namespace edm::cli
