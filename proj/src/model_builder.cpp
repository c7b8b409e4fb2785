#include "lgq/model_builder.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

namespace lgq {

namespace {

constexpr double kDiagonalTolerance = 1e-10;
constexpr double kEfficiencySlack = 1e-12;

void check_observer(const MatrixXcd& M, const char* record, int channels,
                    ValidationReport& report) {
  if (M.rows() != channels || M.cols() != channels) {
    std::ostringstream msg;
    msg << "M_" << record << " is " << M.rows() << "x" << M.cols() << ", expected " << channels
        << "x" << channels;
    report.violations.push_back({kDimension, record, -1, msg.str()});
    return;
  }
  const MatrixXcd mm = M * M.adjoint();
  for (int i = 0; i < channels; ++i) {
    for (int j = 0; j < channels; ++j) {
      if (i != j && std::abs(mm(i, j)) > kDiagonalTolerance) {
        std::ostringstream msg;
        msg << "off-diagonal entry (" << i << "," << j << ") = " << std::abs(mm(i, j));
        report.violations.push_back({kDiagonalConstraint, record, i, msg.str()});
      }
    }
    const double eta = mm(i, i).real();
    if (eta < -kEfficiencySlack || eta > 1.0 + kEfficiencySlack) {
      report.violations.push_back(
          {kEfficiencyRange, record, i, "eta = " + std::to_string(eta)});
    }
  }
}

}  // namespace

bool ValidationReport::flags(const std::string& constraint) const {
  for (const auto& v : violations) {
    if (v.constraint == constraint) return true;
  }
  return false;
}

std::string ValidationReport::summary() const {
  std::ostringstream out;
  for (const auto& v : violations) {
    out << v.constraint;
    if (!v.record.empty()) out << " [record " << v.record << "]";
    if (v.channel >= 0) out << " [channel " << v.channel << "]";
    if (!v.detail.empty()) out << ": " << v.detail;
    out << "\n";
  }
  return out.str();
}

RejectedModelError::RejectedModelError(ValidationReport report)
    : Error("model rejected:\n" + report.summary()), report_(std::move(report)) {}

VectorXd efficiencies(const MatrixXcd& M) { return (M * M.adjoint()).diagonal().real(); }

ValidationReport validate_unravelling(const UnravellingSpec& spec, const ValidationPolicy& policy) {
  ValidationReport report;
  const int channels = static_cast<int>(spec.M_o.rows());
  check_observer(spec.M_o, "o", channels, report);
  check_observer(spec.M_u, "u", channels, report);
  if (report.flags(kDimension)) return report;

  const VectorXd eta_o = efficiencies(spec.M_o);
  const VectorXd eta_u = efficiencies(spec.M_u);
  for (int k = 0; k < channels; ++k) {
    if (eta_o(k) + eta_u(k) > 1.0 + kEfficiencySlack) {
      report.violations.push_back(
          {kEfficiencySum, "", k, "eta_o + eta_u = " + std::to_string(eta_o(k) + eta_u(k))});
    }
  }
  if (!(channels > 0 && eta_o.maxCoeff() > 0.0)) {
    report.violations.push_back({kObservedActive, "o", -1, "no observed channel is monitored"});
  }
  if (policy.require_unobserved_record && !(channels > 0 && eta_u.maxCoeff() > 0.0)) {
    report.violations.push_back(
        {kUnobservedActive, "u", -1, "no unobserved channel is monitored"});
  }
  return report;
}

MatrixXd DerivedModel::gain(const MatrixXd& V, Record r) const {
  return V * C(r).transpose() + Gamma(r).transpose();
}

ClassicalModel DerivedModel::record_model(Record r) const { return {A, D, C(r), Gamma(r)}; }

DerivedModel build_derived_model(const LgqSystemSpec& sys, const UnravellingSpec& unr,
                                 const ValidationPolicy& policy) {
  if (sys.modes < 1) throw InvalidDimensionError("mode count must be positive");
  if (!(sys.hbar > 0.0)) throw InvalidInputError("hbar must be positive");
  const int n = 2 * sys.modes;
  if (sys.G.rows() != n || sys.G.cols() != n) {
    throw InvalidDimensionError("G must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  if (sys.B.cols() != n) {
    throw InvalidDimensionError("B must have " + std::to_string(n) + " columns");
  }
  require_symmetric(sys.G, "G", 1e-12);

  ValidationReport report = validate_unravelling(unr, policy);
  if (report.ok() && unr.M_o.rows() != sys.B.rows()) {
    report.violations.push_back({kDimension, "", -1,
                                 "unravelling has " + std::to_string(unr.M_o.rows()) +
                                     " channels but B has " + std::to_string(sys.B.rows())});
  }
  if (!report.ok()) throw RejectedModelError(std::move(report));

  const int K = sys.channels();
  DerivedModel out;
  out.modes = sys.modes;
  out.channels = K;
  out.hbar = sys.hbar;
  out.Sigma = symplectic_form(sys.modes).matrix();

  const MatrixXcd BdB = sys.B.adjoint() * sys.B;
  out.A = out.Sigma * (sys.G + BdB.imag());
  out.D = symmetrized(sys.hbar * out.Sigma * BdB.real() * out.Sigma.transpose());

  MatrixXd B_tilde(2 * K, n);
  B_tilde << sys.B.real(), sys.B.imag();
  MatrixXd S = MatrixXd::Zero(2 * K, 2 * K);
  S.topRightCorner(K, K).setIdentity();
  S.bottomLeftCorner(K, K) = -MatrixXd::Identity(K, K);

  const auto build = [&](const MatrixXcd& M, MatrixXd& C, MatrixXd& Gamma) {
    MatrixXd T_t(K, 2 * K);
    T_t << M.transpose().real(), M.transpose().imag();
    C = 2.0 / std::sqrt(sys.hbar) * T_t * B_tilde;
    Gamma = -std::sqrt(sys.hbar) * T_t * S * B_tilde * out.Sigma.transpose();
  };
  build(unr.M_o, out.C_o, out.Gamma_o);
  build(unr.M_u, out.C_u, out.Gamma_u);
  return out;
}

MatrixXcd homodyne_matrix(const std::vector<HomodyneChannel>& channels) {
  const auto K = static_cast<Eigen::Index>(channels.size());
  MatrixXcd M = MatrixXcd::Zero(K, K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& ch = channels[static_cast<std::size_t>(k)];
    if (ch.eta < 0.0) throw InvalidInputError("homodyne efficiency must be non-negative");
    M(k, k) = std::polar(std::sqrt(ch.eta), ch.theta);
  }
  return M;
}

LgqSystemSpec example_system(double g) {
  if (!(g > 0.0)) throw InvalidInputError("g must be positive");
  LgqSystemSpec sys;
  sys.modes = 1;
  sys.hbar = 2.0;
  sys.G = MatrixXd{{0.0, 1.0}, {1.0, 0.0}};
  // Scaled so the derived drift and diffusion are A = diag(0, -2), D = hbar diag(1, 1 + g).
  sys.B = MatrixXcd{{{1.0, 0.0}, {0.0, 1.0}}, {{std::sqrt(g), 0.0}, {0.0, 0.0}}};
  return sys;
}

ExampleSpec preset_paper_example(double g, const ExampleObserver& observed,
                                 const ExampleObserver& unobserved) {
  return {example_system(g),
          {homodyne_matrix({observed.gamma, observed.kappa}),
           homodyne_matrix({unobserved.gamma, unobserved.kappa})}};
}

}  // namespace lgq
