#pragma once

// Plain-text configuration, case-study presets and the command
// implementations behind the ifenn command-line tool.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ifenn/coupling.hpp"
#include "ifenn/experiment.hpp"
#include "ifenn/training.hpp"

namespace ifenn::cli {

/// Exit codes of the tool.
enum ExitCode { kOk = 0, kUsage = 2, kNumerical = 3, kProtocol = 4 };

struct KeyInfo {
  std::string key;  // "section.name"
  std::string help;
};

/// Every accepted key. Anything else is rejected with ConfigError.
const std::vector<KeyInfo>& known_keys();

/// Settings as "section.name" -> value. Text form:
///
///   # comment
///   [train]
///   epochs = 1500
class Config {
 public:
  /// Throws ConfigError with the origin and line for syntax errors or
  /// unknown keys.
  static Config parse(const std::string& text, const std::string& origin = "<text>");
  /// Throws NotFound when the file is missing.
  static Config load(const std::string& path);

  /// Later values win. Throws ConfigError for unknown keys.
  void set(const std::string& key, const std::string& value);
  /// "section.name=value". Throws ConfigError.
  void set_override(const std::string& assignment);
  void merge(const Config& other);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  /// Throws ConfigError when the key is absent or does not parse.
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  /// Sectioned text that parses back to the same values.
  std::string echo() const;

 private:
  std::map<std::string, std::string> values_;
};

/// "cube", "tube", "excavation" (desk scale) and "cube-paper", "tube-paper",
/// "tube-surrogate-paper", "excavation-paper".
std::vector<std::string> preset_names();
/// Complete settings of a preset. Throws ConfigError for unknown names.
Config preset(const std::string& name);

/// Preset defaults, then the file (when given), then the overrides.
Config resolve(const std::string& preset_name, const std::string& config_file,
               const std::vector<std::string>& overrides);

train::Experiment build_experiment(const Config& c);
/// Checks branch/trunk input keys ("auto" or a number) against the
/// experiment. Throws ConfigError naming the mismatched dimension.
net::ModelConfig build_model_config(const Config& c, const train::Experiment& e);
train::TrainOptions build_train_options(const Config& c);
train::LabelOptions build_label_options(const Config& c);
coupling::StabilityConfig build_stability(const Config& c, int n_steps);

struct CommandArgs {
  std::string command;  // generate | train | eval | ifenn | fem | stability | bench
  std::string preset = "cube";
  std::string config_file;
  std::vector<std::string> overrides;
  std::string dataset;
  std::string checkpoint;
  std::string output_root = "runs";
  std::string run_dir;  // explicit run directory; empty = timestamped under output_root
  std::string case_spec;  // case id or p10 / p50 / p90; empty = config value
  bool oracle_model = false;
  int threads = 0;  // 0 = config value
};

/// Runs one command and maps errors to exit codes. Progress and summaries
/// go to `out`, error messages to `err`.
int run_command(const CommandArgs& args, std::ostream& out, std::ostream& err);

/// Exit code for an exception.
int exit_code_for(const std::exception& e);

}  // namespace ifenn::cli
