#pragma once

// Experiment registry, run configuration and artifact writing for the
// command-line harness. Each experiment names the result it reproduces by a
// descriptive anchor; anchors that are deliberately not reproduced are
// registered as out-of-scope entries with a reason.

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace shiftmc::cli {

/// Invalid configuration: unknown key, malformed value, unknown experiment.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParamSpec {
  std::string name;
  std::string default_value;
  std::string description;
};

/// Resolved parameters with typed accessors; malformed values throw ConfigError.
class Params {
 public:
  explicit Params(std::map<std::string, std::string> values) : values_(std::move(values)) {}
  const std::string& text(const std::string& name) const;
  double real(const std::string& name) const;
  std::int64_t integer(const std::string& name) const;
  bool flag(const std::string& name) const;
  std::vector<double> reals(const std::string& name) const;  // comma-separated

 private:
  std::map<std::string, std::string> values_;
};

struct CsvColumn {
  std::string name;
  std::string description;
};

struct ResultTable {
  std::vector<CsvColumn> columns;
  std::vector<std::vector<std::string>> rows;
  void add(std::vector<std::string> row);
  std::string csv() const;
};

struct ExperimentOutput {
  ResultTable table;
  nlohmann::json report = nlohmann::json::object();
  bool undecided = false;  // a requested decision could not be made
};

struct Experiment {
  std::string id;
  std::string summary;
  std::vector<std::string> anchors;  // results this entry reproduces or rules out
  bool in_scope = true;
  std::string scope_note;            // reason, for out-of-scope entries
  bool decides = false;              // reports a membership decision (adds `decide`)
  std::vector<ParamSpec> params;
  std::function<ExperimentOutput(const Params&, std::uint64_t seed)> run;
};

const std::vector<Experiment>& registry();
/// Throws ConfigError for unknown ids.
const Experiment& find_experiment(const std::string& id);

/// The results every build must cover, by descriptive anchor.
const std::vector<std::string>& required_anchors();

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 1;
  std::string out = "out";
  std::map<std::string, std::string> params;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Flat `key = value` lines (`#` comments) or a JSON object, detected by the
/// first non-blank character. Keys other than experiment/seed/out are
/// parameters; JSON may also nest them under "params".
ExperimentConfig parse_config(const std::string& text);
std::string to_flat_text(const ExperimentConfig& config);
nlohmann::json to_json(const ExperimentConfig& config);

/// Fills defaults and rejects unknown parameter keys (ConfigError).
ExperimentConfig resolve(const ExperimentConfig& config);

/// Environment variable that overrides the output directory of a config.
inline constexpr const char* kOutEnv = "SHIFTMC_OUT";

/// Runs a resolved config and writes manifest.json, results.csv,
/// results.schema.json and report.json under config.out. Returns the exit
/// status: 0 ok, 2 undecided where a decision was requested. Errors throw.
int run_and_write(const ExperimentConfig& config, std::ostream& log);

/// Shortest round-trip decimal form with '.' separator.
std::string format_real(double x);

}  // namespace shiftmc::cli
