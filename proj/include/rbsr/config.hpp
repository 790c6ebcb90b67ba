#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "rbsr/models.hpp"
#include "rbsr/trainer.hpp"

namespace rbsr {

class ConfigError : public std::runtime_error {
 public:
  enum class Kind { Syntax, UnknownKey, TypeMismatch, MissingPath };

  ConfigError(Kind kind, int line, const std::string& what)
      : std::runtime_error("config line " + std::to_string(line) + ": " + what), kind_(kind), line_(line) {}
  Kind kind() const { return kind_; }
  int line() const { return line_; }

 private:
  Kind kind_;
  int line_;
};

struct RunConfig {
  GeneratorConfig lookalike;
  SRConfig sr;
  SRConfig e2e{24, 64, 4};
  DiscriminatorConfig discriminator;
  TrainSchedule lookalike_schedule = rbsr::lookalike_schedule();
  TrainSchedule sr_schedule = rbsr::sr_schedule();
  TrainSchedule e2e_schedule = rbsr::e2e_schedule();
  int tap_block = 0;  ///< 0 selects the last residual block
  bool deterministic = false;
  int threads = 0;  ///< 0 keeps the runtime default

  /// [paths] entries, already resolved against the config file directory.
  std::map<std::string, std::filesystem::path> paths;
  int paths_line = 0;  ///< line of the [paths] header, or the last line
  std::string hash;    ///< FNV-1a of the effective settings

  /// Throws ConfigError(MissingPath) naming `key` and paths_line.
  const std::filesystem::path& require_path(const std::string& key) const;
  std::optional<std::filesystem::path> path(const std::string& key) const;
};

/// Full-size hyperparameters, or the reduced desk-scale preset.
RunConfig default_config(bool desk_scale);

/// INI-style text: [section] headers, key = value lines, '#' or ';'
/// comments. Unknown sections and keys are rejected with their line number.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {},
                       bool desk_scale = false);

RunConfig load_config(const std::filesystem::path& path, bool desk_scale = false);

/// Canonical key = value dump of the effective settings (hash input).
std::string describe_config(const RunConfig& config);

std::string fnv1a_hex(const std::string& text);

}  // namespace rbsr
