#include "lgq/steady_state.hpp"

#include <cmath>
#include <string>

#include "lgq/errors.hpp"

namespace lgq {

MatrixXd riccati_rate(const DerivedModel& model, const MatrixXd& V, ChannelSet channels) {
  MatrixXd rate = model.A * V + V * model.A.transpose() + model.D;
  if (channels.observed) {
    const MatrixXd K = model.gain(V, Record::observed);
    rate -= K * K.transpose();
  }
  if (channels.unobserved) {
    const MatrixXd K = model.gain(V, Record::unobserved);
    rate -= K * K.transpose();
  }
  return symmetrized(rate);
}

SteadyRiccatiSolution integrate_to_steady(const DerivedModel& model, ChannelSet channels,
                                          const MatrixXd& V0, const SteadyRiccatiOptions& options) {
  if (!(options.dt > 0.0) || !(options.t_max > 0.0)) {
    throw InvalidInputError("steady-state integration needs positive dt and t_max");
  }
  require_symmetric(V0, "V0");
  if (V0.rows() != model.state_dim()) throw InvalidDimensionError("V0 has wrong size");

  SteadyRiccatiSolution out;
  MatrixXd V = symmetrized(V0);
  bool onset_seen = false;
  const auto max_steps = static_cast<std::size_t>(std::ceil(options.t_max / options.dt));
  for (std::size_t k = 0; k <= max_steps; ++k) {
    const double t = static_cast<double>(k) * options.dt;
    const MatrixXd rate = riccati_rate(model, V, channels);
    const double residual = rate.norm();
    if (!std::isfinite(residual)) {
      throw DivergenceError("Riccati flow became non-finite at t = " + std::to_string(t));
    }
    if (!onset_seen && residual < options.onset_tol) {
      onset_seen = true;
      out.convergence_time = t;
    }
    if (residual < options.residual_tol) {
      out.V = V;
      out.settle_time = t;
      out.residual = residual;
      return out;
    }
    V = symmetrized(V + options.dt * rate);
  }
  throw DivergenceError("Riccati flow did not converge within t_max = " +
                        std::to_string(options.t_max) + " (residual " +
                        std::to_string(riccati_rate(model, V, channels).norm()) + ")");
}

MatrixXd solve_steady_riccati(const DerivedModel& model, ChannelSet channels, const MatrixXd& V0,
                              const SteadyRiccatiOptions& options) {
  return integrate_to_steady(model, channels, V0, options).V;
}

SteadyStateReport check_differentiability(const DerivedModel& model, const MatrixXd& V0, double tol,
                                          const SteadyRiccatiOptions& options) {
  if (!(tol > 0.0)) throw InvalidInputError("tolerance must be positive");
  const SteadyRiccatiSolution truth = integrate_to_steady(model, ChannelSet::both(), V0, options);
  const SteadyRiccatiSolution bob =
      integrate_to_steady(model, ChannelSet::unobserved_only(), V0, options);

  SteadyStateReport report;
  report.V_T_ss = truth.V;
  report.V_U_ss = bob.V;
  report.convergence_time = truth.convergence_time;
  report.tol = tol;
  report.difference_norm = (truth.V - bob.V).norm();
  report.gain_norm = model.gain(truth.V, Record::observed).norm();
  report.gain_scale = std::max(1.0, model.C_o.norm());

  const bool by_covariance = report.difference_norm <= tol;
  const bool by_gain = report.gain_norm <= tol * report.gain_scale;
  if (by_covariance != by_gain) {
    throw ConsistencyError("differentiability routes disagree: ||V_T - V_U|| = " +
                           std::to_string(report.difference_norm) + ", ||K_o|| = " +
                           std::to_string(report.gain_norm));
  }
  report.condition_met = by_covariance;
  return report;
}

VectorXd quadratic_variation(const TimeGrid& grid, const std::vector<VectorXd>& series, double t1,
                             double t2) {
  if (series.size() != grid.points()) {
    throw GridMismatchError("series length does not match the grid");
  }
  if (t1 < grid.t0 - 1e-12 || t2 > grid.end() + 1e-12) {
    throw InvalidInputError("window lies outside the grid");
  }
  // Grid indices are computed by rounding so window edges that sit on grid
  // points are included regardless of floating-point noise.
  const double first = std::ceil((t1 - grid.t0) / grid.dt - 1e-9);
  const double last = std::floor((t2 - grid.t0) / grid.dt + 1e-9);
  if (!(last > first)) throw InvalidInputError("quadratic variation window is empty");
  const auto k1 = static_cast<std::size_t>(first);
  const auto k2 = static_cast<std::size_t>(last);
  VectorXd qv = VectorXd::Zero(series.front().size());
  for (std::size_t k = k1; k < k2; ++k) {
    qv += (series[k + 1] - series[k]).cwiseAbs2();
  }
  return qv;
}

}  // namespace lgq
