#include "lgq/trajectory.hpp"

#include <cmath>
#include <string>

#include "lgq/errors.hpp"

namespace lgq {

TimeGrid TimeGrid::over(double t0, double T, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInputError("dt must be positive");
  if (!(T > t0)) throw InvalidInputError("T must exceed t0");
  const double span = (T - t0) / dt;
  const double rounded = std::round(span);
  if (std::abs(span - rounded) > 1e-6 * std::max(1.0, span)) {
    throw InvalidInputError("T - t0 = " + std::to_string(T - t0) +
                            " is not a whole number of steps of dt = " + std::to_string(dt));
  }
  return TimeGrid{t0, dt, static_cast<std::size_t>(rounded)};
}

TimeGrid TimeGrid::coarsened(std::size_t factor) const {
  if (factor == 0 || steps % factor != 0) {
    throw InvalidInputError("cannot coarsen " + std::to_string(steps) + " steps by " +
                            std::to_string(factor));
  }
  return TimeGrid{t0, dt * static_cast<double>(factor), steps / factor};
}

MeasurementRecord MeasurementRecord::coarsened(std::size_t factor) const {
  MeasurementRecord out{grid.coarsened(factor), {}};
  out.increments.reserve(out.grid.steps);
  for (std::size_t k = 0; k < out.grid.steps; ++k) {
    VectorXd sum = increments[k * factor];
    for (std::size_t j = 1; j < factor; ++j) sum += increments[k * factor + j];
    out.increments.push_back(std::move(sum));
  }
  return out;
}

std::vector<VectorXd> StateTrajectory::means() const {
  std::vector<VectorXd> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(s.mean);
  return out;
}

std::vector<MatrixXd> StateTrajectory::covariances() const {
  std::vector<MatrixXd> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(s.cov);
  return out;
}

void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* what) {
  if (!(a == b)) {
    throw GridMismatchError(std::string(what) + ": grids differ (" + std::to_string(a.steps) +
                            " vs " + std::to_string(b.steps) + " steps)");
  }
}

}  // namespace lgq
