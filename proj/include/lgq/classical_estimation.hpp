#pragma once

#include <cstdint>
#include <vector>

#include "lgq/classical_model.hpp"
#include "lgq/trajectory.hpp"

namespace lgq {

/**
 * A classical model that is either constant or specified at every grid point.
 *
 * The halo system of the quantum smoother has time-dependent coefficients,
 * which is the only reason the per-point form exists.
 */
class ModelSequence {
 public:
  ModelSequence(ClassicalModel constant);  // NOLINT: implicit on purpose
  explicit ModelSequence(std::vector<ClassicalModel> per_point);

  const ClassicalModel& at(std::size_t k) const {
    return models_.size() == 1 ? models_.front() : models_[k];
  }
  bool is_constant() const { return models_.size() == 1; }
  /// Throws unless the sequence can be evaluated at every point of `grid`.
  void check_covers(const TimeGrid& grid) const;

 private:
  std::vector<ClassicalModel> models_;
};

struct LangevinRun {
  TimeGrid grid;
  std::vector<VectorXd> path;  // one state per grid point
  MeasurementRecord record;
};

/// Euler-Maruyama path with jointly sampled process and measurement noise.
LangevinRun simulate_langevin(const ClassicalModel& model, const VectorXd& x0, const TimeGrid& grid,
                              std::uint64_t seed, std::uint64_t stream = 0);
LangevinRun simulate_langevin(const ClassicalModel& model, const VectorXd& x0, double dt, double T,
                              std::uint64_t seed);

/// Forward Euler solution of the filter Riccati equation (record independent).
std::vector<MatrixXd> filter_covariances(const ModelSequence& model, const TimeGrid& grid,
                                         const MatrixXd& V0);

/// Kalman-Bucy filter, forward Euler on the record grid.
StateTrajectory kalman_filter(const ModelSequence& model, const MeasurementRecord& record,
                              const VectorXd& x0, const MatrixXd& V0);

/// Innovation increments y dt - C x_F dt, one per step.
std::vector<VectorXd> innovations(const ModelSequence& model, const StateTrajectory& filtered,
                                  const MeasurementRecord& record);

/// Backward information filter from the uninformative state Y(T) = 0, z(T) = 0.
InformationTrajectory retrofilter(const ModelSequence& model, const MeasurementRecord& record);

/**
 * RTS smoother consuming a stored forward filter.
 *
 * Each backward step is implicit in the smoothed state with coefficients taken
 * at the earlier grid point. That is the exact mirror of the forward Euler
 * filter, so the smoother inherits the filter's first-order accuracy even when
 * V_F is badly conditioned.
 */
StateTrajectory rts_smooth(const ModelSequence& model, const StateTrajectory& filtered,
                           const MeasurementRecord& record);

/**
 * Combine forward filter and retrofilter.
 *
 * Evaluated as V_S = (I + V_F Y)^{-1} V_F and x_S = (I + V_F Y)^{-1}(x_F + V_F z),
 * which equals (V_F^{-1} + Y)^{-1} whenever V_F is invertible and stays correct
 * when V_F is singular.
 */
StateTrajectory mfp_combine(const StateTrajectory& filtered, const InformationTrajectory& retro);

}  // namespace lgq
