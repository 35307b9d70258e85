// Command-line runner for the equivariance experiments.
//
//   natflow run <config> [--seed S] [--out DIR] [--experiment E]
//   natflow validate <config>
//
// Flags override values from the config file, which override defaults.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "natflow/errors.hpp"
#include "natflow/experiment.hpp"

namespace {

int print_diagnostics(const std::vector<natflow::Diagnostic>& diagnostics) {
  int fatal = 0;
  for (const auto& d : diagnostics) {
    const bool is_fatal = d.severity == natflow::Diagnostic::Severity::Fatal;
    fatal += is_fatal ? 1 : 0;
    std::cerr << (is_fatal ? "error: " : "warning: ") << d.message << "\n";
  }
  return fatal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equivariance harness for optimizer flows"};
  app.require_subcommand(1);

  std::string run_config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> experiment;
  auto* run_cmd = app.add_subcommand("run", "Run the experiment described by a config");
  run_cmd->add_option("config", run_config, "JSON config file")->required();
  run_cmd->add_option("--seed", seed, "Override the config seed");
  run_cmd->add_option("--out", out_dir, "Output directory");
  run_cmd->add_option("--experiment", experiment,
                      "Override the experiment (classify, table, drift, trajectory)");

  std::string validate_config;
  auto* validate_cmd = app.add_subcommand("validate", "Check a config without running it");
  validate_cmd->add_option("config", validate_config, "JSON config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate_cmd) {
      const auto diagnostics = natflow::validate(natflow::load_config(validate_config));
      const int fatal = print_diagnostics(diagnostics);
      if (diagnostics.empty()) std::cout << "config ok\n";
      return fatal > 0 ? 2 : 0;
    }

    nlohmann::json doc = natflow::load_config(run_config);
    if (doc.is_object()) {
      if (seed) doc["seed"] = *seed;
      if (experiment) doc["experiment"] = *experiment;
      if (out_dir) doc["output"] = *out_dir;
    }
    const auto diagnostics = natflow::validate(doc);
    if (print_diagnostics(diagnostics) > 0) return 2;

    const natflow::ExperimentConfig config = natflow::parse_config(doc);
    const natflow::RunResult result = natflow::run(config);
    natflow::write_outputs(result, config.output);
    std::cout << result.summary;
    std::cout << "wrote";
    for (const auto& [name, contents] : result.files) std::cout << " " << name;
    std::cout << " to " << config.output << "\n";
    return result.exit_code;
  } catch (const natflow::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
