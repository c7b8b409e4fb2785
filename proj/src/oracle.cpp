#include "lgq/oracle.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "lgq/scenario.hpp"

namespace lgq {

using nlohmann::json;

EquivalenceGap trajectory_gap(const StateTrajectory& a, const StateTrajectory& reference) {
  require_same_grid(a.grid, reference.grid, "trajectory_gap");
  EquivalenceGap gap;
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    const GaussianState& x = a.states[k];
    const GaussianState& y = reference.states[k];
    gap.mean_gap = std::max(gap.mean_gap, (x.mean - y.mean).cwiseAbs().maxCoeff());
    gap.cov_gap = std::max(gap.cov_gap, (x.cov - y.cov).cwiseAbs().maxCoeff());
    gap.path_scale = std::max(gap.path_scale, y.mean.cwiseAbs().maxCoeff());
  }
  return gap;
}

namespace {

double halving_ratio(double coarse, double fine) {
  if (coarse <= kRoundoffGap && fine <= kRoundoffGap) return std::numeric_limits<double>::infinity();
  return coarse / std::max(fine, 1e-300);
}

MatrixXd gaussian_matrix(NormalStream& rng, int rows, int cols) {
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng();
  }
  return m;
}

double uniform(NormalStream& rng, double lo, double hi) {
  // Probability integral transform keeps every draw on the one normal stream.
  const double u = 0.5 * std::erfc(-rng() / std::numbers::sqrt2);
  return lo + (hi - lo) * u;
}

}  // namespace

double HalvingResult::mean_ratio() const {
  return halving_ratio(coarse.relative_mean_gap(), fine.relative_mean_gap());
}

double HalvingResult::cov_ratio() const { return halving_ratio(coarse.cov_gap, fine.cov_gap); }

ClassicalModel random_classical_model(NormalStream& rng) {
  const int n = 2;
  MatrixXd A = gaussian_matrix(rng, n, n);
  const double abscissa = Eigen::EigenSolver<MatrixXd>(A).eigenvalues().real().maxCoeff();
  A -= (abscissa + uniform(rng, 0.5, 1.5)) * MatrixXd::Identity(n, n);

  const MatrixXd E = gaussian_matrix(rng, n, n);
  MatrixXd R = gaussian_matrix(rng, n, n);
  // Scaling R below unit spectral norm makes [[E E^T, E R], [R^T E^T, I]] PSD.
  R *= uniform(rng, 0.2, 0.9) / Eigen::JacobiSVD<MatrixXd>(R).singularValues()(0);

  ClassicalModel m;
  m.A = A;
  m.D = E * E.transpose();
  m.C = gaussian_matrix(rng, n, n);
  m.Gamma = (E * R).transpose();
  return m;
}

ClassicalCase random_classical_case(NormalStream& rng) {
  ClassicalCase c;
  c.model = random_classical_model(rng);
  c.x0 = gaussian_matrix(rng, 2, 1);
  const MatrixXd W = gaussian_matrix(rng, 2, 2);
  c.V0 = MatrixXd::Identity(2, 2) + 0.5 * W * W.transpose();
  return c;
}

QuantumCase random_quantum_case(NormalStream& rng, const std::string& label) {
  LgqSystemSpec sys;
  sys.modes = 1;
  sys.hbar = 2.0;
  sys.G = symmetrized(gaussian_matrix(rng, 2, 2));
  sys.B = MatrixXcd(2, 2);
  sys.B.real() = 0.7 * gaussian_matrix(rng, 2, 2);
  sys.B.imag() = 0.7 * gaussian_matrix(rng, 2, 2);

  std::vector<HomodyneChannel> obs(2), unobs(2);
  for (int k = 0; k < 2; ++k) {
    const double eta_o = uniform(rng, 0.1, 0.9);
    const double eta_u = (1.0 - eta_o) * uniform(rng, 0.1, 1.0);
    obs[static_cast<std::size_t>(k)] = {eta_o, uniform(rng, 0.0, 2.0 * std::numbers::pi)};
    unobs[static_cast<std::size_t>(k)] = {eta_u, uniform(rng, 0.0, 2.0 * std::numbers::pi)};
  }
  QuantumCase c;
  c.label = label;
  c.model = build_derived_model(sys, {homodyne_matrix(obs), homodyne_matrix(unobs)});
  c.x0 = gaussian_matrix(rng, 2, 1);
  const MatrixXd W = gaussian_matrix(rng, 2, 2);
  // Eigenvalues at least hbar/2 guarantee the uncertainty relation.
  c.V0 = 0.5 * sys.hbar * (MatrixXd::Identity(2, 2) + W * W.transpose());
  return c;
}

EquivalenceGap classical_equivalence(const ClassicalModel& model, const MeasurementRecord& record,
                                     const VectorXd& x0, const MatrixXd& V0) {
  const StateTrajectory filtered = kalman_filter(model, record, x0, V0);
  const StateTrajectory rts = rts_smooth(model, filtered, record);
  const StateTrajectory mfp = mfp_combine(filtered, retrofilter(model, record));
  return trajectory_gap(rts, mfp);
}

HalvingResult classical_equivalence_halving(const ClassicalModel& model, const VectorXd& x0,
                                            const MatrixXd& V0, double dt, double T,
                                            std::uint64_t seed) {
  const LangevinRun fine = simulate_langevin(model, x0, TimeGrid::over(0.0, T, 0.5 * dt), seed);
  HalvingResult out;
  out.fine = classical_equivalence(model, fine.record, x0, V0);
  out.coarse = classical_equivalence(model, fine.record.coarsened(2), x0, V0);
  return out;
}

QuantumPipeline run_quantum_pipeline(const DerivedModel& model, const VectorXd& x0,
                                     const MatrixXd& V0, TrueStateRun true_run,
                                     const QuantumSmootherOptions& options) {
  QuantumPipeline p;
  p.true_run = std::move(true_run);
  p.filtered = quantum_filter(model, p.true_run.observed, x0, V0);
  p.halo = build_halo(model, p.filtered, p.true_run);
  p.rts = quantum_rts_smooth(model, p.halo, p.filtered, p.true_run, options);
  p.mfp = quantum_mfp_smooth(model, p.halo, p.filtered, p.true_run);
  return p;
}

TrueStateRun coarsen_true_run(const DerivedModel& model, const TrueStateRun& run,
                              std::size_t factor) {
  const TimeGrid grid = run.truth.grid.coarsened(factor);
  const std::vector<MatrixXd> covs = true_covariances(model, grid, run.truth.states.front().cov);
  TrueStateRun out{{grid, {}}, run.observed.coarsened(factor), run.unobserved.coarsened(factor),
                   run.seed, run.stream};
  out.truth.states.reserve(grid.points());
  for (std::size_t k = 0; k < grid.points(); ++k) {
    out.truth.states.push_back({run.truth.states[k * factor].mean, covs[k]});
  }
  return out;
}

HalvingResult quantum_equivalence_halving(const DerivedModel& model, const VectorXd& x0,
                                          const MatrixXd& V0, double dt, double T,
                                          std::uint64_t seed,
                                          const QuantumSmootherOptions& options) {
  TrueStateRun fine = simulate_true_state(model, x0, V0, TimeGrid::over(0.0, T, 0.5 * dt), seed);
  TrueStateRun coarse = coarsen_true_run(model, fine, 2);
  HalvingResult out;
  {
    const QuantumPipeline p = run_quantum_pipeline(model, x0, V0, std::move(fine), options);
    out.fine = trajectory_gap(p.rts.trajectory, p.mfp.trajectory);
  }
  {
    const QuantumPipeline p = run_quantum_pipeline(model, x0, V0, std::move(coarse), options);
    out.coarse = trajectory_gap(p.rts.trajectory, p.mfp.trajectory);
  }
  return out;
}

InnovationStats innovation_statistics(const std::vector<std::vector<VectorXd>>& batches) {
  InnovationStats s;
  Eigen::Index dim = 0;
  for (const auto& b : batches) {
    if (!b.empty()) dim = b.front().size();
  }
  VectorXd sum = VectorXd::Zero(dim), sum2 = VectorXd::Zero(dim), sum4 = VectorXd::Zero(dim);
  for (const auto& batch : batches) {
    for (const auto& v : batch) {
      sum += v;
      sum2 += v.cwiseAbs2();
      sum4 += v.cwiseAbs2().cwiseAbs2();
      ++s.samples;
    }
  }
  const double n = static_cast<double>(s.samples);
  s.mean = sum / n;
  // Innovations have zero mean by construction, so the variance is taken about
  // zero; the standard error follows from the fourth moment.
  s.variance = sum2 / n;
  s.variance_se = ((sum4 / n - s.variance.cwiseAbs2()) / n).cwiseSqrt();
  s.mean_se = (s.variance / n).cwiseSqrt();
  return s;
}

bool OracleReport::passed() const {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

json OracleReport::to_json() const {
  json list = json::array();
  for (const auto& c : checks) {
    // Infinite ratios (gaps at round-off) are not representable in JSON.
    const auto finite = [](double v) { return std::isfinite(v) ? json(v) : json("inf"); };
    list.push_back({{"name", c.name},
                    {"passed", c.passed},
                    {"value", finite(c.value)},
                    {"limit", finite(c.limit)},
                    {"margin", std::isfinite(c.value) ? json(c.limit - c.value) : json(nullptr)},
                    {"detail", c.detail}});
  }
  return {{"passed", passed()}, {"checks", list}};
}

namespace {

struct GapSummary {
  double worst_mean = 0.0;
  double worst_cov = 0.0;
  double worst_ratio = std::numeric_limits<double>::infinity();
  std::string worst_mean_case, worst_cov_case, worst_ratio_case;

  void add(const HalvingResult& r, const std::string& label) {
    if (r.coarse.relative_mean_gap() > worst_mean) {
      worst_mean = r.coarse.relative_mean_gap();
      worst_mean_case = label;
    }
    if (r.coarse.cov_gap > worst_cov) {
      worst_cov = r.coarse.cov_gap;
      worst_cov_case = label;
    }
    const double ratio = std::min(r.mean_ratio(), r.cov_ratio());
    if (ratio < worst_ratio) {
      worst_ratio = ratio;
      worst_ratio_case = label;
    }
  }

  void emit(OracleReport& report, const std::string& prefix) const {
    report.checks.push_back({prefix + "_mean_gap", worst_mean <= 1e-3, worst_mean, 1e-3,
                             "max relative mean gap, worst case " + worst_mean_case});
    report.checks.push_back({prefix + "_cov_gap", worst_cov <= 1e-3, worst_cov, 1e-3,
                             "max covariance gap, worst case " + worst_cov_case});
    report.checks.push_back({prefix + "_halving", worst_ratio >= 1.8, worst_ratio, 1.8,
                             "smallest gap ratio dt vs dt/2 (lower bound), worst case " +
                                 worst_ratio_case});
  }
};

QuantumCase preset_case(const std::string& name) {
  const ResolvedScenario rs = resolve_scenario(preset_scenario(name));
  return {name, rs.model, rs.x0, rs.V0};
}

double worst_psd_margin(const std::vector<MatrixXd>& a, const std::vector<MatrixXd>& b) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::min(worst, min_eigenvalue(a[k] - b[k]));
  return worst;
}

double worst_uncertainty_margin(const std::vector<MatrixXd>& covs, double hbar) {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& V : covs) worst = std::min(worst, uncertainty_margin(V, hbar));
  return worst;
}

}  // namespace

OracleReport oracle_suite(const OracleOptions& options) {
  OracleReport report;
  NormalStream models(options.base_seed, 0);

  GapSummary classical;
  for (int i = 0; i < options.seeds; ++i) {
    const ClassicalCase c = random_classical_case(models);
    classical.add(classical_equivalence_halving(c.model, c.x0, c.V0, options.dt, options.T,
                                                options.base_seed + 1 + static_cast<std::uint64_t>(i)),
                  "classical#" + std::to_string(i));
  }
  classical.emit(report, "classical_rts_mfp");

  std::vector<QuantumCase> cases;
  for (int i = 0; i < options.seeds; ++i) {
    cases.push_back(random_quantum_case(models, "quantum#" + std::to_string(i)));
  }
  for (const auto& name : preset_names()) cases.push_back(preset_case(name));
  GapSummary quantum;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const QuantumCase& c = cases[i];
    quantum.add(quantum_equivalence_halving(c.model, c.x0, c.V0, options.dt, options.T,
                                            options.base_seed + 1000 + i, options.smoother),
                c.label);
  }
  quantum.emit(report, "quantum_rts_mfp");

  const TimeGrid grid = TimeGrid::over(0.0, options.T, options.dt);
  const TimeGrid half = TimeGrid::over(0.0, options.T, 0.5 * options.dt);
  for (const auto& name : preset_names()) {
    const QuantumCase c = preset_case(name);
    const QuantumPipeline p = run_quantum_pipeline(
        c.model, c.x0, c.V0, simulate_true_state(c.model, c.x0, c.V0, grid, options.base_seed),
        options.smoother);

    if (name == "fig1-top") {
      const StateTrajectory halo_kb =
          kalman_filter(p.halo.model.as_classical(c.model), p.true_run.observed, c.x0,
                        MatrixXd::Zero(c.x0.size(), c.x0.size()));
      const EquivalenceGap g = trajectory_gap(halo_kb, p.halo.filter.trajectory);
      const double worst = std::max(g.mean_gap, g.cov_gap);
      report.checks.push_back({"halo_identity_" + name, worst <= 1e-6, worst, 1e-6,
                               "classical filter on the halo system vs (x_F, V_F - V_T)"});
    }

    const auto VT = p.true_run.truth.covariances();
    const auto VF = p.filtered.covariances();
    const auto VS = p.rts.trajectory.covariances();
    const double unc = std::min({worst_uncertainty_margin(VT, c.model.hbar),
                                 worst_uncertainty_margin(VF, c.model.hbar),
                                 worst_uncertainty_margin(VS, c.model.hbar)});
    const double psd = std::min(worst_psd_margin(VF, VT), worst_psd_margin(VS, VT));
    report.checks.push_back({"uncertainty_audit_" + name, unc >= -kPsdTolerance, -unc,
                             kPsdTolerance, "negated smallest eigenvalue of V + i(hbar/2)Sigma"});
    report.checks.push_back({"halo_psd_audit_" + name, psd >= -kPsdTolerance, -psd, kPsdTolerance,
                             "negated smallest eigenvalue of V_F - V_T and V_S - V_T"});

    const GaussianState& s0 = p.rts.trajectory.states.front();
    const double t0_defect = std::max((s0.mean - c.x0).cwiseAbs().maxCoeff(),
                                      (s0.cov - c.V0).cwiseAbs().maxCoeff());
    report.checks.push_back({"t0_coincidence_" + name, t0_defect <= 1e-4, t0_defect, 1e-4,
                             "returned smoothed state at t0 vs (x0, V0)"});

    const QuantumPipeline ph = run_quantum_pipeline(
        c.model, c.x0, c.V0, simulate_true_state(c.model, c.x0, c.V0, half, options.base_seed),
        options.smoother);
    const auto raw_defect = [&](const QuantumPipeline& q) {
      const GaussianState& u = *q.rts.unprojected_t0;
      return std::max((u.mean - c.x0).cwiseAbs().maxCoeff(), (u.cov - c.V0).cwiseAbs().maxCoeff());
    };
    const double ratio = raw_defect(p) / std::max(raw_defect(ph), 1e-300);
    report.checks.push_back({"t0_defect_halving_" + name, ratio >= 1.8, ratio, 1.8,
                             "pre-projection t0 defect ratio, dt vs dt/2 (lower bound)"});

    const InnovationStats stats = innovation_statistics(
        {innovations(c.model.record_model(Record::observed), p.filtered, p.true_run.observed)});
    double worst_z = 0.0;
    for (Eigen::Index i = 0; i < stats.variance.size(); ++i) {
      worst_z = std::max(worst_z, std::abs(stats.variance(i) - options.dt) / stats.variance_se(i));
      worst_z = std::max(worst_z, std::abs(stats.mean(i)) / stats.mean_se(i));
    }
    report.checks.push_back({"innovation_statistics_" + name, worst_z <= 3.0, worst_z, 3.0,
                             "largest standardized deviation of innovation mean or variance"});
  }
  return report;
}

}  // namespace lgq
