#include "lgq/quantum_estimation.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "lgq/errors.hpp"
#include "lgq/random.hpp"

namespace lgq {

namespace {

void require_physical(const MatrixXd& V0, double hbar) {
  require_symmetric(V0, "V0");
  if (!check_uncertainty(V0, hbar)) {
    throw InvalidInputError("V0 violates the uncertainty relation (margin " +
                            std::to_string(uncertainty_margin(V0, hbar)) + ")");
  }
}

// A forward Euler step can push a pure state across the uncertainty boundary by
// a local error of order dt^2 times the squared size of the coefficients.
// Anything below that is discretization noise rather than a modelling error.
double euler_audit_tolerance(const DerivedModel& model, double dt) {
  const double scale = 1.0 + model.A.norm() + model.D.norm() + model.C_o.squaredNorm() +
                       model.Gamma_o.squaredNorm();
  return kPsdTolerance + dt * dt * scale * scale;
}

void check_shared_grid(const StateTrajectory& filtered, const TrueStateRun& true_run,
                       const char* what) {
  require_same_grid(filtered.grid, true_run.truth.grid, what);
  require_same_grid(filtered.grid, true_run.observed.grid, what);
}

// Rank of a symmetric PSD matrix with a hysteresis band: an eigenvalue that was
// counted at the previous point stays counted while above the threshold, a new
// one must clear `band` times the threshold.
int banded_rank(const PseudoInverse& pi, int previous, double band) {
  int rank = 0;
  for (Eigen::Index i = 0; i < pi.eigenvalues.size(); ++i) {
    const double lambda = std::abs(pi.eigenvalues(i));
    const bool keep = lambda > band * pi.threshold || (lambda > pi.threshold && i < previous);
    if (!keep) break;
    rank = static_cast<int>(i) + 1;
  }
  return rank;
}

MatrixXd truncated_inverse(const PseudoInverse& pi, int rank) {
  const auto n = pi.basis.rows();
  MatrixXd inv = MatrixXd::Zero(n, n);
  for (int i = 0; i < rank; ++i) {
    inv += pi.basis.row(i).transpose() * pi.basis.row(i) / pi.eigenvalues(i);
  }
  return inv;
}

MatrixXd range_projector(const PseudoInverse& pi, int rank) {
  const auto kept = pi.basis.topRows(rank);
  return kept.transpose() * kept;
}

}  // namespace

std::vector<MatrixXd> true_covariances(const DerivedModel& model, const TimeGrid& grid,
                                       const MatrixXd& V0) {
  require_physical(V0, model.hbar);
  std::vector<MatrixXd> covs;
  covs.reserve(grid.points());
  covs.push_back(symmetrized(V0));
  for (std::size_t k = 0; k < grid.steps; ++k) {
    const MatrixXd& V = covs.back();
    const MatrixXd Ko = model.gain(V, Record::observed);
    const MatrixXd Ku = model.gain(V, Record::unobserved);
    const MatrixXd rate =
        model.A * V + V * model.A.transpose() + model.D - Ko * Ko.transpose() - Ku * Ku.transpose();
    covs.push_back(symmetrized(V + grid.dt * rate));
  }
  return covs;
}

TrueStateRun simulate_true_state(const DerivedModel& model, const VectorXd& x0, const MatrixXd& V0,
                                 const TimeGrid& grid, std::uint64_t seed, std::uint64_t stream) {
  return simulate_true_state(model, x0, true_covariances(model, grid, V0), grid, seed, stream);
}

TrueStateRun simulate_true_state(const DerivedModel& model, const VectorXd& x0, const MatrixXd& V0,
                                 double dt, double T, std::uint64_t seed) {
  return simulate_true_state(model, x0, V0, TimeGrid::over(0.0, T, dt), seed);
}

TrueStateRun simulate_true_state(const DerivedModel& model, const VectorXd& x0,
                                 const std::vector<MatrixXd>& true_covs, const TimeGrid& grid,
                                 std::uint64_t seed, std::uint64_t stream) {
  if (x0.size() != model.state_dim()) throw InvalidDimensionError("x0 has wrong length");
  if (true_covs.size() != grid.points()) {
    throw GridMismatchError("true covariance path does not match the grid");
  }
  const int K = model.channels;
  const double sqrt_dt = std::sqrt(grid.dt);

  TrueStateRun run{{grid, {}}, {grid, {}}, {grid, {}}, seed, stream};
  run.truth.states.reserve(grid.points());
  run.observed.increments.reserve(grid.steps);
  run.unobserved.increments.reserve(grid.steps);
  run.truth.states.push_back({x0, true_covs[0]});

  // The two records are driven by independent Wiener increments.
  NormalStream normals(seed, stream);
  VectorXd dw_o(K), dw_u(K);
  for (std::size_t k = 0; k < grid.steps; ++k) {
    normals.fill(dw_o);
    normals.fill(dw_u);
    dw_o *= sqrt_dt;
    dw_u *= sqrt_dt;
    const VectorXd& x = run.truth.states.back().mean;
    const MatrixXd& V = true_covs[k];
    run.observed.increments.push_back(model.C_o * x * grid.dt + dw_o);
    run.unobserved.increments.push_back(model.C_u * x * grid.dt + dw_u);
    VectorXd next = x + model.A * x * grid.dt + model.gain(V, Record::observed) * dw_o +
                    model.gain(V, Record::unobserved) * dw_u;
    run.truth.states.push_back({std::move(next), true_covs[k + 1]});
  }
  return run;
}

StateTrajectory quantum_filter(const DerivedModel& model, const MeasurementRecord& observed,
                               const VectorXd& x0, const MatrixXd& V0) {
  require_physical(V0, model.hbar);
  StateTrajectory out = kalman_filter(model.record_model(Record::observed), observed, x0, V0);
  const double tol = euler_audit_tolerance(model, observed.grid.dt);
  for (std::size_t k = 0; k < out.states.size(); ++k) {
    const double margin = uncertainty_margin(out.states[k].cov, model.hbar);
    if (margin < -tol) {
      std::ostringstream msg;
      msg << "filtered covariance violates the uncertainty relation at t = " << out.grid.time(k)
          << " (margin " << std::scientific << margin << ")";
      throw ConsistencyError(msg.str());
    }
  }
  return out;
}

ModelSequence HaloModel::as_classical(const DerivedModel& model) const {
  std::vector<ClassicalModel> seq;
  seq.reserve(A_bar.size());
  for (std::size_t k = 0; k < A_bar.size(); ++k) {
    seq.push_back({model.A, E_bar_sq[k], model.C_o, Gamma_bar[k]});
  }
  return ModelSequence(std::move(seq));
}

HaloSystem build_halo(const DerivedModel& model, const StateTrajectory& filtered,
                      const TrueStateRun& true_run) {
  check_shared_grid(filtered, true_run, "build_halo");
  const TimeGrid& grid = filtered.grid;
  HaloSystem halo{{grid, {}, {}, {}, {}}, {{grid, {}}}};
  HaloModel& hm = halo.model;
  hm.A_bar.reserve(grid.points());
  hm.D_bar.reserve(grid.points());
  hm.E_bar_sq.reserve(grid.points());
  hm.Gamma_bar.reserve(grid.points());
  halo.filter.trajectory.states.reserve(grid.points());
  for (std::size_t k = 0; k < grid.points(); ++k) {
    const MatrixXd& VT = true_run.truth.states[k].cov;
    const MatrixXd Ko = model.gain(VT, Record::observed);
    const MatrixXd Ku = model.gain(VT, Record::unobserved);
    hm.Gamma_bar.push_back(Ko.transpose());
    hm.E_bar_sq.push_back(symmetrized(Ko * Ko.transpose() + Ku * Ku.transpose()));
    // E E^T - Gamma_bar^T Gamma_bar collapses to the unobserved gain alone.
    hm.D_bar.push_back(symmetrized(Ku * Ku.transpose()));
    hm.A_bar.push_back(model.A - Ko * model.C_o);
    const GaussianState& f = filtered.states[k];
    halo.filter.trajectory.states.push_back({f.mean, symmetrized(f.cov - VT)});
  }
  return halo;
}

SmoothedQuantumState quantum_rts_smooth(const DerivedModel& model, const HaloSystem& halo,
                                        const StateTrajectory& filtered,
                                        const TrueStateRun& true_run,
                                        const QuantumSmootherOptions& options) {
  check_shared_grid(filtered, true_run, "quantum_rts_smooth");
  require_same_grid(filtered.grid, halo.model.grid, "quantum_rts_smooth");
  const TimeGrid& grid = filtered.grid;
  const double dt = grid.dt;
  const int n = model.state_dim();
  const MatrixXd I = MatrixXd::Identity(n, n);
  const MatrixXd Co = model.C_o;
  const MatrixXd GoG = model.Gamma_o.transpose() * model.Gamma_o;

  SmoothedQuantumState out;
  out.trajectory = {grid, std::vector<GaussianState>(grid.points())};
  out.Q.resize(grid.points());
  out.halo_rank.resize(grid.points());

  const auto q_matrix = [&](const MatrixXd& VT, const MatrixXd& Db, const MatrixXd& Vi) {
    MatrixXd Q = model.D - GoG + VT * Co.transpose() * Co * VT - Db * Vi * VT - VT * Vi * Db -
                 2.0 * Db;
    Q = symmetrized(Q);
    return options.q_override ? options.q_override(Q) : Q;
  };

  int rank = n;
  const auto decide = [&](std::size_t k) {
    const PseudoInverse pi =
        symmetric_pseudo_inverse(halo.filter.trajectory.states[k].cov, options.eig_tol);
    const int next = banded_rank(pi, rank, options.hysteresis);
    if (next != rank && k != grid.steps) out.rank_events.push_back({k, rank, next});
    rank = next;
    out.halo_rank[k] = rank;
    return pi;
  };

  {
    // Terminal condition, copied so it holds bit for bit.
    const PseudoInverse pi = decide(grid.steps);
    out.trajectory.states[grid.steps] = filtered.states[grid.steps];
    out.Q[grid.steps] = q_matrix(true_run.truth.states[grid.steps].cov,
                                 halo.model.D_bar[grid.steps], truncated_inverse(pi, rank));
  }

  for (std::size_t k = grid.steps; k-- > 0;) {
    const PseudoInverse pi = decide(k);
    const MatrixXd Vi = truncated_inverse(pi, rank);
    const MatrixXd& VT = true_run.truth.states[k].cov;
    const MatrixXd& Db = halo.model.D_bar[k];
    const MatrixXd Ko = halo.model.Gamma_bar[k].transpose();
    const MatrixXd DVi = Db * Vi;
    const MatrixXd M = halo.model.A_bar[k] + DVi;
    out.Q[k] = q_matrix(VT, Db, Vi);

    const GaussianState& later = out.trajectory.states[k + 1];
    // Mean: x_{k+1} - x_k = dt (A x_k + DVi (x_k - x_F)) + K_o (dy_o - C_o x_k dt).
    const VectorXd rhs =
        later.mean + dt * DVi * filtered.states[k].mean - Ko * true_run.observed.increments[k];
    VectorXd mean = (I + dt * M).partialPivLu().solve(rhs);
    // Covariance: V_{k+1} - V_k = dt (M V_k + V_k M^T + Q).
    MatrixXd cov = symmetrized(solve_lyapunov(0.5 * I + dt * M, later.cov - dt * out.Q[k]));

    if (k == 0) out.unprojected_t0 = GaussianState{mean, cov};
    if (rank < n) {
      // Directions outside range(V_F - V_T) carry no halo uncertainty: there the
      // smoothed state coincides with the true state.
      const MatrixXd P = range_projector(pi, rank);
      const GaussianState& truth = true_run.truth.states[k];
      mean = P * mean + (I - P) * truth.mean;
      cov = symmetrized(VT + P * (cov - VT) * P);
    }
    out.trajectory.states[k] = {std::move(mean), std::move(cov)};
  }
  return out;
}

SmoothedQuantumState quantum_mfp_smooth(const DerivedModel& model, const HaloSystem& halo,
                                        const StateTrajectory& filtered,
                                        const TrueStateRun& true_run) {
  check_shared_grid(filtered, true_run, "quantum_mfp_smooth");
  require_same_grid(filtered.grid, halo.model.grid, "quantum_mfp_smooth");
  const InformationTrajectory retro =
      retrofilter(halo.model.as_classical(model), true_run.observed);
  const StateTrajectory halo_smoothed = mfp_combine(halo.filter.trajectory, retro);

  SmoothedQuantumState out;
  out.trajectory = {filtered.grid, {}};
  out.trajectory.states.reserve(filtered.grid.points());
  out.halo_rank.reserve(filtered.grid.points());
  for (std::size_t k = 0; k < filtered.grid.points(); ++k) {
    const GaussianState& truth = true_run.truth.states[k];
    // Fold the true-state spread back in: mean from the halo, covariances add.
    out.trajectory.states.push_back(
        gaussian_convolve(halo_smoothed.states[k], GaussianState{truth.mean * 0.0, truth.cov}));
    out.halo_rank.push_back(symmetric_pseudo_inverse(halo.filter.trajectory.states[k].cov).rank);
  }
  return out;
}

}  // namespace lgq
