// Command-line front end: run scenarios, analyze steady states, run the oracle battery.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lgq/errors.hpp"
#include "lgq/model_builder.hpp"
#include "lgq/oracle.hpp"
#include "lgq/scenario.hpp"

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kValidation = 2, kDivergence = 3, kOracleFailed = 4 };

lgq::ScenarioConfig load(const std::string& spec) {
  // "preset:<name>" is accepted anywhere a config file is.
  const std::string prefix = "preset:";
  if (spec.rfind(prefix, 0) == 0) return lgq::preset_scenario(spec.substr(prefix.size()));
  return lgq::load_scenario(spec);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classical and quantum linear-Gaussian smoothing"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(lgq::kSoftwareVersion));

  std::string config_path;
  auto* run = app.add_subcommand("run", "Simulate a scenario and write CSV, report and manifest");
  run->add_option("config", config_path, "Scenario JSON file or preset:<name>")->required();
  std::string out_dir = ".";
  run->add_option("-o,--output-root", out_dir,
                  std::string("Output root (overridden by $") + lgq::kOutputRootEnv + ")");

  auto* analyze = app.add_subcommand("analyze", "Steady-state differentiability report as JSON");
  analyze->add_option("config", config_path, "Scenario JSON file or preset:<name>")->required();
  std::string sweep;
  analyze->add_option("--sweep", sweep, "Parameter sweep, e.g. g=0.5:1.5:0.1");

  auto* oracle = app.add_subcommand("oracle", "Run the cross-oracle equivalence battery");
  lgq::OracleOptions oracle_options;
  oracle->add_option("--seeds", oracle_options.seeds, "Random models per battery")
      ->check(CLI::PositiveNumber);
  oracle->add_option("--dt", oracle_options.dt, "Coarse step size")->check(CLI::PositiveNumber);
  oracle->add_option("--T", oracle_options.T, "Run length")->check(CLI::PositiveNumber);

  auto* presets = app.add_subcommand("presets", "Built-in scenarios");
  auto* presets_list = presets->add_subcommand("list", "List preset names");
  presets->require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const lgq::RunManifest m = lgq::run_scenario(load(config_path), lgq::output_root(out_dir));
      for (const auto& f : m.files) std::cout << f.string() << "\n";
      return kOk;
    }
    if (*analyze) {
      std::optional<lgq::SweepSpec> spec;
      if (!sweep.empty()) spec = lgq::parse_sweep(sweep);
      std::cout << lgq::analyze(load(config_path), spec).dump(2) << "\n";
      return kOk;
    }
    if (*oracle) {
      const lgq::OracleReport report = lgq::oracle_suite(oracle_options);
      std::cout << report.to_json().dump(2) << "\n";
      return report.passed() ? kOk : kOracleFailed;
    }
    if (*presets_list) {
      for (const auto& name : lgq::preset_names()) {
        std::cout << name << "\t" << lgq::preset_description(name) << "\n";
      }
      return kOk;
    }
  } catch (const lgq::RejectedModelError& e) {
    std::cerr << "validation error: " << e.what();
    return kValidation;
  } catch (const lgq::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kDivergence;
  } catch (const lgq::InvalidInputError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const lgq::InvalidDimensionError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
