#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lgq/classical_estimation.hpp"
#include "lgq/model_builder.hpp"
#include "lgq/quantum_estimation.hpp"
#include "lgq/random.hpp"

namespace lgq {

/// Maximum-over-grid disagreement between two smoothed trajectories.
struct EquivalenceGap {
  double mean_gap = 0.0;    // max_k ||x_a - x_b||_inf
  double cov_gap = 0.0;     // max_k max |V_a - V_b|
  double path_scale = 0.0;  // max_k ||x_b||_inf of the reference trajectory

  double relative_mean_gap() const { return mean_gap / std::max(path_scale, 1e-300); }
};

EquivalenceGap trajectory_gap(const StateTrajectory& a, const StateTrajectory& reference);

/// Gaps at dt (coarse) and dt/2 (fine), both built from one fine-grid simulation.
struct HalvingResult {
  EquivalenceGap coarse;
  EquivalenceGap fine;

  double mean_ratio() const;
  double cov_ratio() const;
};

/// Gaps below this are indistinguishable from round-off; halving ratios are not
/// meaningful there and count as converged.
inline constexpr double kRoundoffGap = 1e-12;

// Random model generators used by the oracle battery.

/// A Hurwitz 2D model with PSD joint noise covariance and correlated noises.
ClassicalModel random_classical_model(NormalStream& rng);

struct QuantumCase {
  std::string label;
  DerivedModel model;
  VectorXd x0;
  MatrixXd V0;
};

/// One mode, two channels, random Hamiltonian, couplings and homodyne split.
QuantumCase random_quantum_case(NormalStream& rng, const std::string& label);

struct ClassicalCase {
  ClassicalModel model;
  VectorXd x0;
  MatrixXd V0;
};

ClassicalCase random_classical_case(NormalStream& rng);

// Equivalence runs.

EquivalenceGap classical_equivalence(const ClassicalModel& model, const MeasurementRecord& record,
                                     const VectorXd& x0, const MatrixXd& V0);

HalvingResult classical_equivalence_halving(const ClassicalModel& model, const VectorXd& x0,
                                            const MatrixXd& V0, double dt, double T,
                                            std::uint64_t seed);

struct QuantumPipeline {
  TrueStateRun true_run;
  StateTrajectory filtered;
  HaloSystem halo;
  SmoothedQuantumState rts;
  SmoothedQuantumState mfp;
};

QuantumPipeline run_quantum_pipeline(const DerivedModel& model, const VectorXd& x0,
                                     const MatrixXd& V0, TrueStateRun true_run,
                                     const QuantumSmootherOptions& options = {});

/// The same true-state run seen on a grid with `factor` times longer steps. V_T
/// is re-integrated on the coarse grid; means are subsampled; records summed.
TrueStateRun coarsen_true_run(const DerivedModel& model, const TrueStateRun& run,
                              std::size_t factor);

HalvingResult quantum_equivalence_halving(const DerivedModel& model, const VectorXd& x0,
                                          const MatrixXd& V0, double dt, double T,
                                          std::uint64_t seed,
                                          const QuantumSmootherOptions& options = {});

/// Sample statistics of innovation increments, one entry per component.
struct InnovationStats {
  VectorXd mean;
  VectorXd variance;
  VectorXd variance_se;  // standard error of the variance estimate
  VectorXd mean_se;
  std::size_t samples = 0;
};

InnovationStats innovation_statistics(const std::vector<std::vector<VectorXd>>& batches);

// The oracle suite.

struct OracleOptions {
  int seeds = 20;
  double dt = 1e-4;
  double T = 2.0;
  std::uint64_t base_seed = 20240601;
  QuantumSmootherOptions smoother;  // tests inject a corrupted Q through this
};

struct OracleCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double limit = 0.0;
  std::string detail;
};

struct OracleReport {
  std::vector<OracleCheck> checks;

  bool passed() const;
  nlohmann::json to_json() const;
};

OracleReport oracle_suite(const OracleOptions& options = {});

}  // namespace lgq
