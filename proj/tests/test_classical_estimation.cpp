#include "lgq/classical_estimation.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "lgq/errors.hpp"
#include "lgq/steady_state.hpp"

namespace lgq {
namespace {

ClassicalModel scalar_model(double a, double d, double c, double gamma) {
  return {MatrixXd::Constant(1, 1, a), MatrixXd::Constant(1, 1, d), MatrixXd::Constant(1, 1, c),
          MatrixXd::Constant(1, 1, gamma)};
}

// A damped oscillator observed in position, with correlated noise.
ClassicalModel oscillator(double gamma) {
  ClassicalModel m;
  m.A = MatrixXd{{-0.5, 1.0}, {-1.0, -0.3}};
  m.D = MatrixXd{{0.4, 0.1}, {0.1, 1.0}};
  m.C = MatrixXd{{1.0, 0.0}};
  m.Gamma = MatrixXd{{0.0, gamma}};
  return m;
}

double max_abs(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

/// Largest root of f on [lo, hi] by bisection, assuming f(lo) and f(hi) differ in sign.
template <typename F>
double bisect(F f, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((f(lo) > 0) == (f(mid) > 0)) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

TEST(SimulateLangevin, NoiselessPathFollowsTheExponential) {
  const ClassicalModel m = scalar_model(-1.0, 0.0, 1.0, 0.0);
  const LangevinRun run = simulate_langevin(m, VectorXd::Constant(1, 2.0), 1e-4, 1.0, 5);
  ASSERT_EQ(run.path.size(), 10001u);
  for (std::size_t k = 0; k < run.path.size(); k += 1000) {
    const double t = run.grid.time(k);
    EXPECT_NEAR(run.path[k](0), 2.0 * std::exp(-t), 1e-4 * t + 1e-15);
  }
}

TEST(SimulateLangevin, WienerVarianceGrowsLinearly) {
  const ClassicalModel m = scalar_model(0.0, 1.0, 0.0, 0.0);
  const TimeGrid grid = TimeGrid::over(0.0, 1.0, 1e-3);
  const int seeds = 2000;
  double sum = 0.0, sum_sq = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const double x = simulate_langevin(m, VectorXd::Zero(1), grid, 100 + s).path.back()(0);
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / seeds;
  const double var = sum_sq / seeds - mean * mean;
  // Sample variance of N(0, 1) has standard error sqrt(2 / seeds).
  EXPECT_NEAR(var, 1.0, 4.0 * std::sqrt(2.0 / seeds));
  EXPECT_NEAR(mean, 0.0, 4.0 / std::sqrt(seeds));
}

TEST(SimulateLangevin, ProcessAndMeasurementNoiseAreCorrelated) {
  const ClassicalModel m = scalar_model(0.0, 1.0, 0.0, 0.5);
  const LangevinRun run = simulate_langevin(m, VectorXd::Zero(1), 1e-3, 100.0, 8);
  double cross = 0.0;
  for (std::size_t k = 0; k < run.grid.steps; ++k) {
    cross += (run.path[k + 1](0) - run.path[k](0)) * run.record.increments[k](0);
  }
  // E[dx dy] = Gamma dt; the product of the two increments has variance (D + Gamma^2) dt^2.
  const double se = std::sqrt(1.25 / run.grid.steps);
  EXPECT_NEAR(cross / run.grid.end(), 0.5, 5.0 * se);
}

TEST(SimulateLangevin, RejectsNonPsdJointNoise) {
  EXPECT_THROW(simulate_langevin(scalar_model(0.0, 0.1, 1.0, 1.0), VectorXd::Zero(1), 1e-3, 0.1, 1),
               InvalidModelError);
}

TEST(SimulateLangevin, SameSeedSamePath) {
  const ClassicalModel m = oscillator(0.3);
  const LangevinRun a = simulate_langevin(m, VectorXd::Ones(2), 1e-3, 1.0, 42);
  const LangevinRun b = simulate_langevin(m, VectorXd::Ones(2), 1e-3, 1.0, 42);
  const LangevinRun c = simulate_langevin(m, VectorXd::Ones(2), 1e-3, 1.0, 43);
  EXPECT_EQ(a.path.back(), b.path.back());
  EXPECT_NE(a.path.back(), c.path.back());
}

TEST(FilterCovariances, BlindFilterRelaxesToTheLyapunovSolution) {
  ClassicalModel m;
  m.A = VectorXd{{-1.0, -2.0}}.asDiagonal();
  m.D = MatrixXd{{2.0, 1.0}, {1.0, 4.0}};
  m.C = MatrixXd::Zero(1, 2);
  m.Gamma = MatrixXd::Zero(1, 2);
  // Diagonal A gives V_ij = D_ij / -(a_i + a_j).
  const MatrixXd oracle{{1.0, 1.0 / 3.0}, {1.0 / 3.0, 1.0}};
  const auto covs = filter_covariances(m, TimeGrid::over(0.0, 30.0, 1e-3), MatrixXd::Identity(2, 2));
  EXPECT_LE(max_abs(covs.back() - oracle), 1e-10);
}

TEST(FilterCovariances, ScalarRiccatiFixedPoint) {
  // dV/dt = -2V + 2 - V^2 vanishes at sqrt(3) - 1.
  const ClassicalModel m = scalar_model(-1.0, 2.0, 1.0, 0.0);
  const double oracle = bisect([](double v) { return -2.0 * v + 2.0 - v * v; }, 0.0, 2.0);
  ASSERT_NEAR(oracle, std::sqrt(3.0) - 1.0, 1e-14);
  const auto covs = filter_covariances(m, TimeGrid::over(0.0, 20.0, 1e-3), MatrixXd::Constant(1, 1, 5.0));
  EXPECT_NEAR(covs.back()(0, 0), oracle, 1e-10);
}

TEST(KalmanFilter, CovarianceDoesNotDependOnTheRecord) {
  const ClassicalModel m = oscillator(0.2);
  const MatrixXd V0 = MatrixXd::Identity(2, 2);
  const LangevinRun a = simulate_langevin(m, VectorXd::Zero(2), 1e-3, 2.0, 1);
  const LangevinRun b = simulate_langevin(m, VectorXd::Zero(2), 1e-3, 2.0, 2);
  const auto fa = kalman_filter(m, a.record, VectorXd::Zero(2), V0).covariances();
  const auto fb = kalman_filter(m, b.record, VectorXd::Zero(2), V0).covariances();
  for (std::size_t k = 0; k < fa.size(); ++k) ASSERT_EQ(fa[k], fb[k]) << "k = " << k;
}

TEST(KalmanFilter, InnovationsHaveUnitIntensity) {
  const ClassicalModel m = oscillator(0.3);
  const LangevinRun run = simulate_langevin(m, VectorXd::Zero(2), 1e-3, 200.0, 11);
  const StateTrajectory f = kalman_filter(m, run.record, VectorXd::Zero(2), MatrixXd::Zero(2, 2));
  const auto nu = innovations(m, f, run.record);
  double sum_sq = 0.0;
  for (const VectorXd& v : nu) sum_sq += v.squaredNorm();
  const double steps = static_cast<double>(nu.size());
  EXPECT_NEAR(sum_sq / (steps * run.grid.dt), 1.0, 5.0 * std::sqrt(2.0 / steps));
}

TEST(KalmanFilter, RejectsModelsThatDoNotCoverTheGrid) {
  const ClassicalModel m = oscillator(0.0);
  const LangevinRun run = simulate_langevin(m, VectorXd::Zero(2), 1e-2, 1.0, 1);
  const ModelSequence short_sequence(std::vector<ClassicalModel>(5, m));
  EXPECT_THROW(kalman_filter(short_sequence, run.record, VectorXd::Zero(2), MatrixXd::Identity(2, 2)),
               Error);
  EXPECT_THROW(kalman_filter(m, run.record, VectorXd::Zero(3), MatrixXd::Identity(3, 3)),
               InvalidDimensionError);
}

TEST(Retrofilter, BlindRetrofilterCarriesNoInformation) {
  ClassicalModel m = oscillator(0.0);
  m.C = MatrixXd::Zero(1, 2);
  const LangevinRun run = simulate_langevin(m, VectorXd::Zero(2), 1e-3, 1.0, 3);
  const InformationTrajectory r = retrofilter(m, run.record);
  for (const InformationState& s : r.states) {
    EXPECT_TRUE(s.Y.isZero(0.0));
    EXPECT_TRUE(s.z.isZero(0.0));
  }
}

TEST(Retrofilter, StaticStateAccumulatesInformationLinearly) {
  ClassicalModel m;
  m.A = MatrixXd::Zero(2, 2);
  m.D = MatrixXd::Zero(2, 2);
  m.C = MatrixXd{{1.0, 2.0}, {0.0, 1.0}};
  m.Gamma = MatrixXd::Zero(2, 2);
  const LangevinRun run = simulate_langevin(m, VectorXd::Ones(2), 1e-3, 1.0, 3);
  const InformationTrajectory r = retrofilter(m, run.record);
  const MatrixXd CtC = m.C.transpose() * m.C;
  VectorXd z_oracle = VectorXd::Zero(2);
  for (std::size_t k = run.grid.steps; k-- > 0;) {
    z_oracle += m.C.transpose() * run.record.increments[k];
    const double to_go = run.grid.end() - run.grid.time(k);
    EXPECT_LE(max_abs(r.states[k].Y - to_go * CtC), 1e-11);
    EXPECT_LE((r.states[k].z - z_oracle).cwiseAbs().maxCoeff(), 1e-11);
  }
}

TEST(Retrofilter, InformationMatchesAFineRungeKuttaSolution) {
  const ClassicalModel m = oscillator(0.4);
  const MatrixXd At = m.A - m.Gamma.transpose() * m.C;
  const MatrixXd Dt = m.D - m.Gamma.transpose() * m.Gamma;
  const MatrixXd CtC = m.C.transpose() * m.C;
  // Time-to-go form: dY/dtau = Y At + At^T Y - Y Dt Y + C^T C, Y(0) = 0.
  auto rate = [&](const MatrixXd& Y) -> MatrixXd {
    return Y * At + At.transpose() * Y - Y * Dt * Y + CtC;
  };
  const double T = 3.0;
  const double h = 1e-5;
  MatrixXd Y_oracle = MatrixXd::Zero(2, 2);
  for (int i = 0; i < static_cast<int>(std::lround(T / h)); ++i) {
    const MatrixXd k1 = rate(Y_oracle);
    const MatrixXd k2 = rate(Y_oracle + 0.5 * h * k1);
    const MatrixXd k3 = rate(Y_oracle + 0.5 * h * k2);
    const MatrixXd k4 = rate(Y_oracle + h * k3);
    Y_oracle += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  const LangevinRun run = simulate_langevin(m, VectorXd::Zero(2), 1e-4, T, 9);
  const MatrixXd Y = retrofilter(m, run.record).states.front().Y;
  EXPECT_LE(max_abs(Y - Y_oracle), 1e-3 * max_abs(Y_oracle));
}

TEST(Retrofilter, MatchesCovarianceFormFromAWidePrior) {
  // dV/dtau = -At V - V At^T + Dt - V C^T C V from V = 1e8 I. The early flow is
  // stiff, so the RK4 step is kept at a tenth of the local decay time.
  const ClassicalModel m = oscillator(0.4);
  const MatrixXd At = m.A - m.Gamma.transpose() * m.C;
  const MatrixXd Dt = m.D - m.Gamma.transpose() * m.Gamma;
  const MatrixXd CtC = m.C.transpose() * m.C;
  auto rate = [&](const MatrixXd& V) -> MatrixXd {
    return -At * V - V * At.transpose() + Dt - V * CtC * V;
  };
  const double T = 2.0;
  MatrixXd V = 1e8 * MatrixXd::Identity(2, 2);
  double tau = 0.0;
  while (tau < T) {
    const double h = std::min({1e-4, 0.1 / ((V * CtC).norm() + 1.0), T - tau});
    const MatrixXd k1 = rate(V);
    const MatrixXd k2 = rate(V + 0.5 * h * k1);
    const MatrixXd k3 = rate(V + 0.5 * h * k2);
    const MatrixXd k4 = rate(V + h * k3);
    V += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    tau += h;
  }
  // C = (1, 0) leaves the wide prior's momentum direction poorly resolved, so
  // compare in information form where the terminal condition is exact.
  const LangevinRun run = simulate_langevin(m, VectorXd::Zero(2), 1e-4, T, 12);
  const MatrixXd Y = retrofilter(m, run.record).states.front().Y;
  const MatrixXd Y_oracle = symmetrized(V).inverse();
  EXPECT_LE(max_abs(Y - Y_oracle), 1e-3 * max_abs(Y_oracle));
}

TEST(Retrofilter, MirrorsTheFilterWhenDynamicsAreStatic) {
  // With A = 0 and Gamma = 0 the problem is symmetric under time reversal, so
  // the retrofilter started from no information matches a forward filter with
  // a very wide prior.
  ClassicalModel m;
  m.A = MatrixXd::Zero(2, 2);
  m.D = MatrixXd{{0.5, 0.2}, {0.2, 0.3}};
  m.C = MatrixXd{{1.0, 0.5}, {0.0, 1.0}};
  m.Gamma = MatrixXd::Zero(2, 2);
  const TimeGrid grid = TimeGrid::over(0.0, 1.0, 1e-5);
  const auto forward = filter_covariances(m, grid, 1e3 * MatrixXd::Identity(2, 2));
  const LangevinRun run = simulate_langevin(m, VectorXd::Zero(2), grid, 4);
  const InformationTrajectory r = retrofilter(m, run.record);
  for (const double tau : {0.5, 0.75, 1.0}) {
    const std::size_t k = static_cast<std::size_t>(std::lround(tau / grid.dt));
    const MatrixXd V_R = r.states[grid.steps - k].Y.inverse();
    EXPECT_LE(max_abs(V_R - forward[k]), 1e-2 * max_abs(forward[k])) << "tau = " << tau;
  }
}

struct SmoothingCase {
  ClassicalModel model;
  LangevinRun run;
  StateTrajectory filtered;
};

SmoothingCase smoothing_case(double gamma, double dt, double T, std::uint64_t seed) {
  const ClassicalModel m = oscillator(gamma);
  LangevinRun run = simulate_langevin(m, VectorXd{{1.0, -1.0}}, dt, T, seed);
  StateTrajectory f = kalman_filter(m, run.record, VectorXd::Zero(2), MatrixXd::Identity(2, 2));
  return {m, std::move(run), std::move(f)};
}

TEST(RtsSmooth, TerminalStateIsTheFilter) {
  const SmoothingCase c = smoothing_case(0.3, 1e-3, 2.0, 1);
  const StateTrajectory s = rts_smooth(c.model, c.filtered, c.run.record);
  EXPECT_EQ(s.states.back().mean, c.filtered.states.back().mean);
  EXPECT_EQ(s.states.back().cov, c.filtered.states.back().cov);
}

TEST(RtsSmooth, SmoothingNeverIncreasesUncertainty) {
  const SmoothingCase c = smoothing_case(0.3, 1e-3, 4.0, 2);
  const StateTrajectory s = rts_smooth(c.model, c.filtered, c.run.record);
  for (std::size_t k = 0; k < s.states.size(); k += 100) {
    EXPECT_TRUE(is_psd(c.filtered.states[k].cov - s.states[k].cov, 1e-9)) << "k = " << k;
    EXPECT_TRUE(is_psd(s.states[k].cov)) << "k = " << k;
  }
}

TEST(RtsSmooth, AgreesWithTheTwoFilterSmoother) {
  const SmoothingCase c = smoothing_case(0.3, 1e-4, 3.0, 5);
  const StateTrajectory rts = rts_smooth(c.model, c.filtered, c.run.record);
  const StateTrajectory mfp = mfp_combine(c.filtered, retrofilter(c.model, c.run.record));
  double path_scale = 0.0;
  for (const VectorXd& x : c.run.path) path_scale = std::max(path_scale, x.cwiseAbs().maxCoeff());
  for (std::size_t k = 0; k < rts.states.size(); k += 500) {
    EXPECT_LE((rts.states[k].mean - mfp.states[k].mean).cwiseAbs().maxCoeff(), 1e-2 * path_scale);
    EXPECT_LE(max_abs(rts.states[k].cov - mfp.states[k].cov), 1e-2);
  }
}

TEST(RtsSmooth, SmoothedMeanIsDifferentiableOnlyWithoutCrossCorrelation) {
  const auto smoothed_qv = [](double gamma) {
    const SmoothingCase c = smoothing_case(gamma, 1e-4, 2.0, 6);
    const StateTrajectory s = rts_smooth(c.model, c.filtered, c.run.record);
    const StateTrajectory& f = c.filtered;
    return std::pair{quadratic_variation(s.grid, s.means(), 0.5, 1.5).sum(),
                     quadratic_variation(f.grid, f.means(), 0.5, 1.5).sum()};
  };
  const auto [smooth_qv, filter_qv] = smoothed_qv(0.0);
  EXPECT_LT(smooth_qv, 1e-2 * filter_qv);
  // Gamma^T Gamma dt per step: the correlated part of the noise stays rough.
  const auto [rough_qv, ignored] = smoothed_qv(0.8);
  EXPECT_GT(rough_qv, 0.3);
}

TEST(MfpCombine, EmptyRetrofilterReturnsTheFilter) {
  const SmoothingCase c = smoothing_case(0.3, 1e-3, 0.5, 7);
  InformationTrajectory empty{c.filtered.grid,
                              std::vector<InformationState>(c.filtered.grid.points(),
                                                            {MatrixXd::Zero(2, 2), VectorXd::Zero(2)})};
  const StateTrajectory s = mfp_combine(c.filtered, empty);
  for (std::size_t k = 0; k < s.states.size(); ++k) {
    EXPECT_LE((s.states[k].mean - c.filtered.states[k].mean).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE(max_abs(s.states[k].cov - c.filtered.states[k].cov), 1e-14);
  }
}

TEST(MfpCombine, MatchesTheInformationSumForInvertibleFilter) {
  const MatrixXd V_F{{2.0, 0.5}, {0.5, 1.0}};
  const VectorXd x_F{{1.0, -2.0}};
  const MatrixXd Y{{1.0, 0.2}, {0.2, 3.0}};
  const VectorXd z{{0.5, 0.7}};
  const TimeGrid grid{0.0, 1.0, 0};
  const StateTrajectory f{grid, {{x_F, V_F}}};
  const InformationTrajectory r{grid, {{Y, z}}};
  const GaussianState s = mfp_combine(f, r).states.front();
  const MatrixXd V_oracle = (V_F.inverse() + Y).inverse();
  const VectorXd x_oracle = V_oracle * (V_F.inverse() * x_F + z);
  EXPECT_LE(max_abs(s.cov - V_oracle), 1e-13);
  EXPECT_LE((s.mean - x_oracle).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(MfpCombine, SingularFilterKeepsItsNullDirection) {
  // A direction known exactly by the filter stays exact after combination.
  const MatrixXd V_F = VectorXd{{1.0, 0.0}}.asDiagonal();
  const TimeGrid grid{0.0, 1.0, 0};
  const StateTrajectory f{grid, {{VectorXd{{0.0, 3.0}}, V_F}}};
  const InformationTrajectory r{grid, {{MatrixXd::Identity(2, 2), VectorXd{{2.0, 5.0}}}}};
  const GaussianState s = mfp_combine(f, r).states.front();
  EXPECT_NEAR(s.cov(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(s.cov(1, 1), 0.0, 1e-15);
  EXPECT_NEAR(s.mean(0), 1.0, 1e-15);
  EXPECT_NEAR(s.mean(1), 3.0, 1e-15);
}

TEST(MfpCombine, RejectsMismatchedGrids) {
  const SmoothingCase c = smoothing_case(0.3, 1e-3, 0.5, 7);
  const LangevinRun other = simulate_langevin(c.model, VectorXd::Zero(2), 1e-3, 0.6, 1);
  EXPECT_THROW(mfp_combine(c.filtered, retrofilter(c.model, other.record)), GridMismatchError);
  EXPECT_THROW(rts_smooth(c.model, c.filtered, other.record), GridMismatchError);
}

}  // namespace
}  // namespace lgq
