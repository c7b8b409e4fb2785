#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lgq/errors.hpp"
#include "lgq/model_builder.hpp"
#include "lgq/steady_state.hpp"
#include "lgq/trajectory.hpp"

namespace lgq {

inline constexpr const char* kSoftwareName = "lgq";
inline constexpr const char* kSoftwareVersion = "0.1.0";
inline constexpr const char* kOutputRootEnv = "LGQ_OUTPUT_ROOT";

/// Bad configuration; the message starts with the JSON path of the offending field.
class ConfigError : public InvalidInputError {
 public:
  ConfigError(const std::string& path, const std::string& message)
      : InvalidInputError(path + ": " + message), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct SystemConfig {
  // "paper-example" selects the built-in two-channel system with parameter g.
  // An empty preset means the explicit fields are used.
  std::string preset;
  double g = 1.0;
  int modes = 1;
  double hbar = 2.0;
  MatrixXd G;
  MatrixXcd B;

  bool operator==(const SystemConfig& other) const;
};

/// One observer: either homodyne shorthand or an explicit complex matrix.
struct ObserverConfig {
  std::vector<HomodyneChannel> homodyne;
  std::optional<MatrixXcd> M;

  bool operator==(const ObserverConfig& other) const;
};

struct UnravellingConfig {
  ObserverConfig observed;
  ObserverConfig unobserved;

  bool operator==(const UnravellingConfig&) const = default;
};

struct RunConfig {
  double t0 = 0.0;
  double dt = 1e-4;
  double T = 2.0;
  std::uint64_t seed = 1;
  std::optional<VectorXd> x0;  // defaults exist only for the built-in example
  std::optional<MatrixXd> V0;

  bool operator==(const RunConfig& other) const;
};

inline const std::vector<std::string> kEstimatorNames = {"quantum_rts", "quantum_mfp",
                                                         "classical_rts"};

struct OutputConfig {
  std::string directory;  // relative to the output root; empty means runs/<name>-seed<seed>
  std::vector<std::string> estimators = {"quantum_rts", "classical_rts"};
  bool csv = true;
  bool report = true;

  bool operator==(const OutputConfig&) const = default;
};

struct ScenarioConfig {
  std::string name = "scenario";
  SystemConfig system;
  UnravellingConfig unravelling;
  RunConfig run;
  OutputConfig outputs;

  bool operator==(const ScenarioConfig&) const = default;
};

ScenarioConfig parse_scenario(const nlohmann::json& doc);
nlohmann::json to_json(const ScenarioConfig& config);
ScenarioConfig load_scenario(const std::filesystem::path& file);

std::vector<std::string> preset_names();
std::string preset_description(const std::string& name);
ScenarioConfig preset_scenario(const std::string& name);

/// Everything a run needs, validated.
struct ResolvedScenario {
  LgqSystemSpec system;
  UnravellingSpec unravelling;
  DerivedModel model;
  TimeGrid grid;
  VectorXd x0;
  MatrixXd V0;
};

/// Expands shorthand, fills defaults and validates. Throws ConfigError or
/// RejectedModelError before any simulation work starts.
ResolvedScenario resolve_scenario(const ScenarioConfig& config);

struct RunManifest {
  nlohmann::json document;
  std::filesystem::path directory;
  std::vector<std::filesystem::path> files;
};

/// Output root: the environment override if set, otherwise `fallback`.
std::filesystem::path output_root(const std::filesystem::path& fallback = ".");

/// Simulate, filter and smooth; write the CSV, steady-state report and manifest.
RunManifest run_scenario(const ScenarioConfig& config, const std::filesystem::path& root);

nlohmann::json report_to_json(const SteadyStateReport& report);

struct SweepSpec {
  std::string parameter;  // only "g" is supported
  std::vector<double> values;
};

/// Parses "g=a:b:step"; values are a + i*step up to b inclusive.
SweepSpec parse_sweep(const std::string& text);

nlohmann::json analyze(const ScenarioConfig& config, const std::optional<SweepSpec>& sweep = {});

nlohmann::json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& path);

}  // namespace lgq
