#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mlmpc {

// Flat key=value configuration with per-experiment defaults. Files hold one
// `key = value` pair per line; '#' starts a comment. Unknown keys are
// rejected so typos surface instead of silently reverting to defaults.
class ExperimentConfig {
 public:
  static ExperimentConfig defaults(const std::string& experiment);
  static ExperimentConfig load(const std::string& experiment,
                               const std::filesystem::path& path);

  const std::string& experiment() const { return experiment_; }

  bool has(const std::string& key) const;
  double number(const std::string& key) const;
  long integer(const std::string& key) const;
  std::string text(const std::string& key) const;
  bool flag(const std::string& key) const;

  void set(const std::string& key, const std::string& value);

  // Canonical serialization (sorted keys) and its FNV-1a hash; every
  // artifact produced from this configuration carries the hash.
  std::string canonical() const;
  std::string hash() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::string experiment_;
  std::map<std::string, std::string> values_;
};

const std::vector<std::string>& known_experiments();

}  // namespace mlmpc
