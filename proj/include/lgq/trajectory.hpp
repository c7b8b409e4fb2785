#pragma once

#include <cstddef>
#include <vector>

#include "lgq/gaussian_linalg.hpp"

namespace lgq {

/// Uniform grid t_k = t0 + k*dt for k = 0..steps.
struct TimeGrid {
  double t0 = 0.0;
  double dt = 1e-4;
  std::size_t steps = 0;

  /// Builds a grid covering [t0, T]. T - t0 must be a whole number of steps.
  static TimeGrid over(double t0, double T, double dt);

  std::size_t points() const { return steps + 1; }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
  double end() const { return time(steps); }

  /// Grid with `factor` times fewer, `factor` times longer steps.
  TimeGrid coarsened(std::size_t factor) const;

  bool operator==(const TimeGrid&) const = default;
};

/// Measurement increments y*dt, one per step: increments[k] covers [t_k, t_{k+1}].
struct MeasurementRecord {
  TimeGrid grid;
  std::vector<VectorXd> increments;

  /// Sum consecutive increments so the record lives on grid.coarsened(factor).
  MeasurementRecord coarsened(std::size_t factor) const;
};

/// Gaussian estimates at every grid point (steps + 1 entries).
struct StateTrajectory {
  TimeGrid grid;
  std::vector<GaussianState> states;

  std::vector<VectorXd> means() const;
  std::vector<MatrixXd> covariances() const;
};

/// Retrofilter state in information form: Y = V_R^{-1}, z = Y x_R.
struct InformationState {
  MatrixXd Y;
  VectorXd z;
};

struct InformationTrajectory {
  TimeGrid grid;
  std::vector<InformationState> states;
};

/// Throws GridMismatchError unless the two grids are identical.
void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* what);

}  // namespace lgq
