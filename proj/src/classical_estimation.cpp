#include "lgq/classical_estimation.hpp"

#include <cmath>
#include <string>

#include "lgq/errors.hpp"
#include "lgq/random.hpp"

namespace lgq {

MatrixXd ClassicalModel::joint_noise_covariance() const {
  const int n = state_dim();
  const int p = meas_dim();
  MatrixXd joint(n + p, n + p);
  joint << D, Gamma.transpose(), Gamma, MatrixXd::Identity(p, p);
  return joint;
}

void ClassicalModel::check_dimensions() const {
  const auto n = A.rows();
  const bool ok = A.cols() == n && D.rows() == n && D.cols() == n && C.cols() == n &&
                  Gamma.rows() == C.rows() && Gamma.cols() == n;
  if (!ok) throw InvalidDimensionError("classical model has inconsistent matrix shapes");
}

ModelSequence::ModelSequence(ClassicalModel constant) : models_{std::move(constant)} {
  models_.front().check_dimensions();
}

ModelSequence::ModelSequence(std::vector<ClassicalModel> per_point) : models_(std::move(per_point)) {
  if (models_.empty()) throw InvalidInputError("empty model sequence");
  for (const auto& m : models_) m.check_dimensions();
}

void ModelSequence::check_covers(const TimeGrid& grid) const {
  if (models_.size() != 1 && models_.size() != grid.points()) {
    throw GridMismatchError("model sequence has " + std::to_string(models_.size()) +
                            " entries for a grid of " + std::to_string(grid.points()) + " points");
  }
}

namespace {

void check_record(const ModelSequence& model, const MeasurementRecord& record) {
  model.check_covers(record.grid);
  if (record.increments.size() != record.grid.steps) {
    throw GridMismatchError("record length does not match its grid");
  }
  const auto p = model.at(0).meas_dim();
  for (const auto& y : record.increments) {
    if (y.size() != p) throw InvalidDimensionError("record increment has wrong length");
  }
}

}  // namespace

LangevinRun simulate_langevin(const ClassicalModel& model, const VectorXd& x0, const TimeGrid& grid,
                              std::uint64_t seed, std::uint64_t stream) {
  model.check_dimensions();
  const int n = model.state_dim();
  const int p = model.meas_dim();
  if (x0.size() != n) throw InvalidDimensionError("x0 has wrong length");
  const MatrixXd root = psd_cholesky(model.joint_noise_covariance());
  const double sqrt_dt = std::sqrt(grid.dt);

  NormalStream normals(seed, stream);
  VectorXd xi(n + p);
  LangevinRun run{grid, {}, {grid, {}}};
  run.path.reserve(grid.points());
  run.record.increments.reserve(grid.steps);
  run.path.push_back(x0);
  for (std::size_t k = 0; k < grid.steps; ++k) {
    normals.fill(xi);
    const VectorXd noise = sqrt_dt * (root * xi);
    const VectorXd& x = run.path.back();
    run.record.increments.push_back(model.C * x * grid.dt + noise.tail(p));
    run.path.push_back(x + model.A * x * grid.dt + noise.head(n));
  }
  return run;
}

LangevinRun simulate_langevin(const ClassicalModel& model, const VectorXd& x0, double dt, double T,
                              std::uint64_t seed) {
  return simulate_langevin(model, x0, TimeGrid::over(0.0, T, dt), seed);
}

std::vector<MatrixXd> filter_covariances(const ModelSequence& model, const TimeGrid& grid,
                                         const MatrixXd& V0) {
  model.check_covers(grid);
  require_symmetric(V0, "V0");
  std::vector<MatrixXd> covs;
  covs.reserve(grid.points());
  covs.push_back(symmetrized(V0));
  for (std::size_t k = 0; k < grid.steps; ++k) {
    const ClassicalModel& m = model.at(k);
    const MatrixXd& V = covs.back();
    const MatrixXd K = m.gain_plus(V);
    const MatrixXd rate = m.A * V + V * m.A.transpose() + m.D - K * K.transpose();
    covs.push_back(symmetrized(V + grid.dt * rate));
  }
  return covs;
}

StateTrajectory kalman_filter(const ModelSequence& model, const MeasurementRecord& record,
                              const VectorXd& x0, const MatrixXd& V0) {
  check_record(model, record);
  if (x0.size() != model.at(0).state_dim() || V0.rows() != x0.size()) {
    throw InvalidDimensionError("initial state does not match the model");
  }
  const TimeGrid& grid = record.grid;
  const std::vector<MatrixXd> covs = filter_covariances(model, grid, V0);

  StateTrajectory out{grid, {}};
  out.states.reserve(grid.points());
  out.states.push_back({x0, covs[0]});
  for (std::size_t k = 0; k < grid.steps; ++k) {
    const ClassicalModel& m = model.at(k);
    const VectorXd& x = out.states.back().mean;
    const VectorXd innovation = record.increments[k] - m.C * x * grid.dt;
    VectorXd next = x + m.A * x * grid.dt + m.gain_plus(covs[k]) * innovation;
    out.states.push_back({std::move(next), covs[k + 1]});
  }
  return out;
}

std::vector<VectorXd> innovations(const ModelSequence& model, const StateTrajectory& filtered,
                                  const MeasurementRecord& record) {
  check_record(model, record);
  require_same_grid(filtered.grid, record.grid, "innovations");
  std::vector<VectorXd> out;
  out.reserve(record.grid.steps);
  for (std::size_t k = 0; k < record.grid.steps; ++k) {
    out.push_back(record.increments[k] - model.at(k).C * filtered.states[k].mean * record.grid.dt);
  }
  return out;
}

InformationTrajectory retrofilter(const ModelSequence& model, const MeasurementRecord& record) {
  check_record(model, record);
  const TimeGrid& grid = record.grid;
  const int n = model.at(0).state_dim();
  const double dt = grid.dt;

  InformationTrajectory out{grid, std::vector<InformationState>(grid.points())};
  MatrixXd Y = MatrixXd::Zero(n, n);
  VectorXd z = VectorXd::Zero(n);
  out.states[grid.steps] = {Y, z};
  // Backward Euler in time-to-go: the step into t_{k-1} uses coefficients at t_k.
  for (std::size_t k = grid.steps; k > 0; --k) {
    const ClassicalModel& m = model.at(k);
    const MatrixXd At = m.A_tilde();
    const MatrixXd Dt = m.D_tilde();
    const MatrixXd YD = Y * Dt;
    const VectorXd dz = (At.transpose() - YD) * z * dt +
                        (m.C.transpose() - Y * m.Gamma.transpose()) * record.increments[k - 1];
    const MatrixXd dY = Y * At + At.transpose() * Y - YD * Y + m.C.transpose() * m.C;
    z += dz;
    Y = symmetrized(Y + dt * dY);
    out.states[k - 1] = {Y, z};
  }
  return out;
}

StateTrajectory rts_smooth(const ModelSequence& model, const StateTrajectory& filtered,
                           const MeasurementRecord& record) {
  check_record(model, record);
  require_same_grid(filtered.grid, record.grid, "rts_smooth");
  const TimeGrid& grid = record.grid;
  const double dt = grid.dt;
  const int n = model.at(0).state_dim();
  const MatrixXd I = MatrixXd::Identity(n, n);

  StateTrajectory out{grid, std::vector<GaussianState>(grid.points())};
  out.states[grid.steps] = filtered.states[grid.steps];
  for (std::size_t k = grid.steps; k-- > 0;) {
    const ClassicalModel& m = model.at(k);
    const GaussianState& f = filtered.states[k];
    const MatrixXd Dt = m.D_tilde();
    const MatrixXd DVi = Dt * symmetric_pseudo_inverse(f.cov).inverse;
    const MatrixXd M = m.A_tilde() + DVi;
    const GaussianState& later = out.states[k + 1];

    // x_{k+1} - x_k = dt (A x_k + DVi (x_k - x_F)) + Gamma^T (dy_k - C x_k dt), solved for x_k.
    const VectorXd rhs = later.mean + dt * DVi * f.mean - m.Gamma.transpose() * record.increments[k];
    VectorXd mean = (I + dt * M).partialPivLu().solve(rhs);
    // V_{k+1} - V_k = dt (M V_k + V_k M^T - D_tilde), solved for V_k.
    MatrixXd cov = solve_lyapunov(0.5 * I + dt * M, later.cov + dt * Dt);
    out.states[k] = {std::move(mean), symmetrized(cov)};
  }
  return out;
}

StateTrajectory mfp_combine(const StateTrajectory& filtered, const InformationTrajectory& retro) {
  require_same_grid(filtered.grid, retro.grid, "mfp_combine");
  if (filtered.states.size() != retro.states.size()) {
    throw GridMismatchError("mfp_combine: trajectories differ in length");
  }
  StateTrajectory out{filtered.grid, {}};
  out.states.reserve(filtered.states.size());
  for (std::size_t k = 0; k < filtered.states.size(); ++k) {
    const GaussianState& f = filtered.states[k];
    const InformationState& r = retro.states[k];
    const auto n = f.cov.rows();
    const auto lu = (MatrixXd::Identity(n, n) + f.cov * r.Y).partialPivLu();
    out.states.push_back({lu.solve(f.mean + f.cov * r.z), symmetrized(lu.solve(f.cov))});
  }
  return out;
}

}  // namespace lgq
