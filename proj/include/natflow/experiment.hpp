#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "natflow/harness.hpp"
#include "natflow/integrate.hpp"

namespace natflow {

enum class ExperimentKind { Classify, Table, Drift, Trajectory };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment(const std::string& name);

struct InitialState {
  std::vector<double> theta;
  std::vector<double> velocity;
  std::optional<double> time;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Table;
  std::uint64_t seed = 0;
  std::vector<Algorithm> algorithms = all_algorithms();
  std::vector<int> dims = {2, 4, 8};
  nlohmann::json model = {{"kind", "standard"}, {"dim", 4}};
  nlohmann::json dataset;  // null: the model's default dataset
  std::vector<Family> families = ClassifyOptions{}.families;
  int trials = 32;
  int states_per_trial = 4;
  double tolerance = kEquivarianceTol;
  double violation_threshold = kViolationThreshold;
  double max_condition = kMaxSampleCondition;
  std::vector<double> h_list = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
  double final_time = 1.0;
  std::vector<Scheme> schemes = {Scheme::Euler, Scheme::Rk4};
  double h = 1e-2;
  int steps = 100;
  double r = 3.0;
  double epsilon = 1e-8;
  double noise_variance = 1.0;
  std::optional<Matrix> output_metric;
  Family diffeomorphism_family = Family::Shear;
  std::uint64_t diffeomorphism_seed = 0;
  std::optional<InitialState> initial_state;
  std::string output = "out";
};

struct Diagnostic {
  enum class Severity { Warning, Fatal };
  Severity severity = Severity::Warning;
  std::string message;
};

/// Checks a config document without running anything or touching the
/// filesystem (dataset paths are only checked for existence).
std::vector<Diagnostic> validate(const nlohmann::json& config);

/// Throws ConfigError listing every fatal diagnostic.
ExperimentConfig parse_config(const nlohmann::json& config);

/// Reads a JSON config file. Throws ConfigError on I/O or syntax errors.
nlohmann::json load_config(const std::filesystem::path& path);

/// The problem (model, data, hyperparameters) the config describes.
Problem build_problem(const ExperimentConfig& config);

struct RunResult {
  int exit_code = 0;
  std::map<std::string, std::string> files;  // file name -> contents
  std::string summary;
};

/// Runs the experiment in memory. `table` exits 1 when any verdict differs
/// from the expected table.
RunResult run(const ExperimentConfig& config);

/// Writes every output file into `dir`, creating it if needed.
void write_outputs(const RunResult& result, const std::filesystem::path& dir);

// Report rendering, exposed for tests.
nlohmann::ordered_json report_json(const ResidualReport& report);
std::string report_text(const std::vector<ResidualReport>& reports);
std::string drift_csv(const std::vector<DriftResult>& results);

}  // namespace natflow
