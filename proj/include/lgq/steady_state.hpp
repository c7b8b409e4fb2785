#pragma once

#include <vector>

#include "lgq/model_builder.hpp"
#include "lgq/trajectory.hpp"

namespace lgq {

/// Which records condition the covariance flow.
struct ChannelSet {
  bool observed = false;
  bool unobserved = false;

  static ChannelSet both() { return {true, true}; }
  static ChannelSet observed_only() { return {true, false}; }
  static ChannelSet unobserved_only() { return {false, true}; }
  static ChannelSet none() { return {false, false}; }
};

/// dV/dt = A V + V A^T + D - sum over selected records of K_r^+[V] K_r^+[V]^T.
MatrixXd riccati_rate(const DerivedModel& model, const MatrixXd& V, ChannelSet channels);

struct SteadyRiccatiOptions {
  double dt = 1e-4;
  double t_max = 50.0;
  double residual_tol = 1e-10;  // stop once ||dV/dt||_F drops below this
  double onset_tol = 1e-6;      // convergence_time threshold
};

struct SteadyRiccatiSolution {
  MatrixXd V;
  double convergence_time = 0.0;  // first grid time with ||dV/dt||_F < onset_tol
  double settle_time = 0.0;       // time at which residual_tol was reached
  double residual = 0.0;          // ||dV/dt||_F at the returned fixed point
};

/**
 * Integrate the selected Riccati flow from V0 until it stops moving.
 *
 * Uses the same forward Euler step as the estimators. Throws DivergenceError if
 * the residual does not drop below residual_tol before t_max, or if the flow
 * leaves the finite numbers.
 */
SteadyRiccatiSolution integrate_to_steady(const DerivedModel& model, ChannelSet channels,
                                          const MatrixXd& V0, const SteadyRiccatiOptions& options = {});

MatrixXd solve_steady_riccati(const DerivedModel& model, ChannelSet channels, const MatrixXd& V0,
                              const SteadyRiccatiOptions& options = {});

struct SteadyStateReport {
  MatrixXd V_T_ss;
  MatrixXd V_U_ss;
  double difference_norm = 0.0;  // ||V_T_ss - V_U_ss||_F
  double gain_norm = 0.0;        // ||K_o^+[V_T_ss]||_F
  double gain_scale = 1.0;       // max(1, ||C_o||_F)
  double tol = 1e-6;
  bool condition_met = false;
  double convergence_time = 0.0;  // onset of the true-state flow
};

/**
 * Decide whether the smoothed mean becomes differentiable in steady state.
 *
 * Two routes: compare the true-state and Bob-only fixed points, and check that
 * Alice's gain at the true fixed point vanishes. They must agree, otherwise
 * ConsistencyError is raised.
 */
SteadyStateReport check_differentiability(const DerivedModel& model, const MatrixXd& V0,
                                          double tol = 1e-6,
                                          const SteadyRiccatiOptions& options = {});

/// Per-component sum of squared increments over grid points inside [t1, t2].
VectorXd quadratic_variation(const TimeGrid& grid, const std::vector<VectorXd>& series, double t1,
                             double t2);

}  // namespace lgq
