#pragma once

#include "lgq/gaussian_linalg.hpp"

namespace lgq {

/**
 * Linear Gaussian model dx = A x dt + E dv_p, y dt = C x dt + dv_m.
 *
 * The process noise enters only through D = E E^T and the cross-correlation
 * Gamma^T dt = E dv_p dv_m^T. Gamma is stored with the measurement index first
 * (p x n), the same shape as C.
 */
struct ClassicalModel {
  MatrixXd A;
  MatrixXd D;
  MatrixXd C;
  MatrixXd Gamma;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int meas_dim() const { return static_cast<int>(C.rows()); }

  /// K^+[V] = V C^T + Gamma^T, the Kalman gain.
  MatrixXd gain_plus(const MatrixXd& V) const { return V * C.transpose() + Gamma.transpose(); }
  /// K^-[V] = V C^T - Gamma^T, the retrofilter gain.
  MatrixXd gain_minus(const MatrixXd& V) const { return V * C.transpose() - Gamma.transpose(); }

  /// A - Gamma^T C.
  MatrixXd A_tilde() const { return A - Gamma.transpose() * C; }
  /// D - Gamma^T Gamma.
  MatrixXd D_tilde() const { return D - Gamma.transpose() * Gamma; }

  /// [[D, Gamma^T], [Gamma, I]], the per-unit-time joint noise covariance.
  MatrixXd joint_noise_covariance() const;

  /// Throws InvalidDimensionError on inconsistent shapes.
  void check_dimensions() const;
};

}  // namespace lgq
