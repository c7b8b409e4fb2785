#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "lgq/classical_estimation.hpp"
#include "lgq/model_builder.hpp"
#include "lgq/trajectory.hpp"

namespace lgq {

/// The state of maximal knowledge, conditioned on both records.
struct TrueStateRun {
  StateTrajectory truth;
  MeasurementRecord observed;    // y_o dt, Alice
  MeasurementRecord unobserved;  // y_u dt, Bob
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

/// Euler solution of the true-state Riccati equation, both gains subtracted.
std::vector<MatrixXd> true_covariances(const DerivedModel& model, const TimeGrid& grid,
                                       const MatrixXd& V0);

TrueStateRun simulate_true_state(const DerivedModel& model, const VectorXd& x0, const MatrixXd& V0,
                                 const TimeGrid& grid, std::uint64_t seed,
                                 std::uint64_t stream = 0);
TrueStateRun simulate_true_state(const DerivedModel& model, const VectorXd& x0, const MatrixXd& V0,
                                 double dt, double T, std::uint64_t seed);

/// Same as above but reuses a precomputed V_T path. Ensembles use this to
/// avoid re-integrating the deterministic covariance for every seed.
TrueStateRun simulate_true_state(const DerivedModel& model, const VectorXd& x0,
                                 const std::vector<MatrixXd>& true_covs, const TimeGrid& grid,
                                 std::uint64_t seed, std::uint64_t stream = 0);

/// Kalman-Bucy filter on Alice's record. Throws ConsistencyError if any
/// filtered covariance violates the uncertainty relation.
StateTrajectory quantum_filter(const DerivedModel& model, const MeasurementRecord& observed,
                               const VectorXd& x0, const MatrixXd& V0);

/// Time-indexed coefficients of the classical halo system.
struct HaloModel {
  TimeGrid grid;
  std::vector<MatrixXd> A_bar;      // A - Gamma_bar^T C_o
  std::vector<MatrixXd> D_bar;      // E E^T - Gamma_bar^T Gamma_bar
  std::vector<MatrixXd> E_bar_sq;   // sum_r K_r^+ K_r^+^T
  std::vector<MatrixXd> Gamma_bar;  // K_o^+[V_T]^T, measurement index first

  /// The halo system as a per-point classical model (A, E E^T, C_o, Gamma_bar).
  ModelSequence as_classical(const DerivedModel& model) const;
};

/// Haloed filter: mean x_F, covariance V_F - V_T.
struct HaloFilter {
  StateTrajectory trajectory;
};

struct HaloSystem {
  HaloModel model;
  HaloFilter filter;
};

HaloSystem build_halo(const DerivedModel& model, const StateTrajectory& filtered,
                      const TrueStateRun& true_run);

struct RankEvent {
  std::size_t index;  // grid point where the new rank first applies (going backward)
  int from;
  int to;
};

struct SmoothedQuantumState {
  StateTrajectory trajectory;
  std::vector<MatrixXd> Q;        // per grid point; empty for the MFP form
  std::vector<int> halo_rank;     // rank of V_F - V_T used at each point
  std::vector<RankEvent> rank_events;
  // The t0 state just before the null-space projection (RTS form only). The
  // gap between this and the returned t0 state measures discretization error.
  std::optional<GaussianState> unprojected_t0;
};

struct QuantumSmootherOptions {
  std::optional<double> eig_tol;  // absolute threshold; default is scale relative
  double hysteresis = 10.0;       // rank goes up only past hysteresis * threshold
  // Replaces Q before use. Exists so tests can corrupt the smoother on purpose.
  std::function<MatrixXd(const MatrixXd&)> q_override;
};

/**
 * Quantum RTS smoother.
 *
 * Runs backward from V_S(T) = V_F(T). Where V_F - V_T is rank deficient, the
 * components outside its range are pinned to the true state, so at t0 with
 * shared initial conditions the output is exactly (x0, V0).
 */
SmoothedQuantumState quantum_rts_smooth(const DerivedModel& model, const HaloSystem& halo,
                                        const StateTrajectory& filtered,
                                        const TrueStateRun& true_run,
                                        const QuantumSmootherOptions& options = {});

/// Same estimate via retrofilter + MFP on the halo system.
SmoothedQuantumState quantum_mfp_smooth(const DerivedModel& model, const HaloSystem& halo,
                                        const StateTrajectory& filtered,
                                        const TrueStateRun& true_run);

}  // namespace lgq
