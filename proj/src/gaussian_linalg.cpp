#include "lgq/gaussian_linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "lgq/errors.hpp"

namespace lgq {

namespace {

void require_square(const MatrixXd& mat, const char* what) {
  if (mat.rows() != mat.cols()) {
    throw InvalidDimensionError(std::string(what) + " must be square, got " +
                                std::to_string(mat.rows()) + "x" + std::to_string(mat.cols()));
  }
}

}  // namespace

SymplecticForm::SymplecticForm(int modes) : modes_(modes) {
  if (modes < 1) {
    throw InvalidDimensionError("symplectic form needs at least one mode, got " +
                                std::to_string(modes));
  }
  sigma_ = MatrixXd::Zero(2 * modes, 2 * modes);
  for (int j = 0; j < modes; ++j) {
    sigma_(2 * j, 2 * j + 1) = 1.0;
    sigma_(2 * j + 1, 2 * j) = -1.0;
  }
}

SymplecticForm symplectic_form(int modes) { return SymplecticForm(modes); }

double uncertainty_margin(const MatrixXd& cov, double hbar) {
  require_square(cov, "covariance");
  if (cov.rows() == 0 || cov.rows() % 2 != 0) {
    throw InvalidDimensionError("covariance dimension must be even and positive, got " +
                                std::to_string(cov.rows()));
  }
  if (!(hbar > 0.0)) throw InvalidInputError("hbar must be positive");
  const SymplecticForm sigma(static_cast<int>(cov.rows() / 2));
  Eigen::MatrixXcd herm(cov.rows(), cov.cols());
  herm.real() = symmetrized(cov);
  herm.imag() = 0.5 * hbar * sigma.matrix();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

bool check_uncertainty(const MatrixXd& cov, double hbar) {
  return uncertainty_margin(cov, hbar) >= -kPsdTolerance;
}

GaussianState gaussian_convolve(const GaussianState& outer, const GaussianState& kernel) {
  if (outer.mean.size() != kernel.mean.size() || outer.cov.rows() != kernel.cov.rows() ||
      outer.cov.cols() != kernel.cov.cols() || outer.cov.rows() != outer.mean.size()) {
    throw InvalidDimensionError("gaussian_convolve: dimension mismatch");
  }
  return GaussianState{outer.mean, outer.cov + kernel.cov};
}

MatrixXd PseudoInverse::range_projector() const {
  const auto kept = basis.topRows(rank);
  return kept.transpose() * kept;
}

double default_eig_tol(const VectorXd& eigenvalues) {
  const double largest = eigenvalues.size() ? eigenvalues.cwiseAbs().maxCoeff() : 0.0;
  return 1e-9 * std::max(largest, 1.0);
}

PseudoInverse symmetric_pseudo_inverse(const MatrixXd& mat, std::optional<double> eig_tol) {
  require_square(mat, "pseudo-inverse input");
  require_symmetric(mat, "pseudo-inverse input");
  const Eigen::SelfAdjointEigenSolver<MatrixXd> solver(symmetrized(mat));
  const VectorXd& values = solver.eigenvalues();
  const MatrixXd& vectors = solver.eigenvectors();

  const auto n = mat.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(values(a)) > std::abs(values(b));
  });

  PseudoInverse out;
  out.eigenvalues.resize(n);
  out.basis.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues(i) = values(order[static_cast<std::size_t>(i)]);
    out.basis.row(i) = vectors.col(order[static_cast<std::size_t>(i)]).transpose();
  }
  out.threshold = eig_tol.value_or(default_eig_tol(out.eigenvalues));
  if (!(out.threshold > 0.0)) throw InvalidInputError("eig_tol must be positive");

  out.inverse = MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(out.eigenvalues(i)) <= out.threshold) break;
    out.inverse += out.basis.row(i).transpose() * out.basis.row(i) / out.eigenvalues(i);
    ++out.rank;
  }
  return out;
}

MatrixXd symmetrized(const MatrixXd& mat) { return 0.5 * (mat + mat.transpose()); }

double min_eigenvalue(const MatrixXd& symmetric) {
  require_square(symmetric, "matrix");
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(symmetrized(symmetric), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

bool is_psd(const MatrixXd& symmetric, double tol) { return min_eigenvalue(symmetric) >= -tol; }

void require_symmetric(const MatrixXd& mat, const char* what, double rel_tol) {
  require_square(mat, what);
  const double scale = std::max(1.0, mat.cwiseAbs().maxCoeff());
  const double asym = (mat - mat.transpose()).cwiseAbs().maxCoeff();
  if (asym > rel_tol * scale) {
    throw InvalidInputError(std::string(what) + " is not symmetric (max asymmetry " +
                            std::to_string(asym) + ")");
  }
}

MatrixXd psd_cholesky(const MatrixXd& mat, double tol) {
  require_square(mat, "covariance");
  require_symmetric(mat, "covariance");
  const double scale = std::max(1.0, mat.cwiseAbs().maxCoeff());
  if (mat.size() && min_eigenvalue(mat) < -tol * scale) {
    throw InvalidModelError("covariance is not positive semidefinite (min eigenvalue " +
                            std::to_string(min_eigenvalue(mat)) + ")");
  }
  const auto n = mat.rows();
  const double pivot_floor = 1e-12 * scale;
  MatrixXd lower = MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double pivot = mat(j, j) - lower.row(j).head(j).squaredNorm();
    if (pivot <= pivot_floor) continue;  // degenerate direction, column stays zero
    lower(j, j) = std::sqrt(pivot);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      lower(i, j) = (mat(i, j) - lower.row(i).head(j).dot(lower.row(j).head(j))) / lower(j, j);
    }
  }
  return lower;
}

MatrixXd solve_lyapunov(const MatrixXd& F, const MatrixXd& R) {
  require_square(F, "Lyapunov coefficient");
  if (R.rows() != F.rows() || R.cols() != F.cols()) {
    throw InvalidDimensionError("Lyapunov right-hand side does not match coefficient");
  }
  const auto n = F.rows();
  // Column-major vec: vec(F X) = (I kron F) vec X, vec(X F^T) = (F kron I) vec X.
  MatrixXd op = MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index a = 0; a < n; ++a) {
    op.block(a * n, a * n, n, n) += F;
    for (Eigen::Index b = 0; b < n; ++b) {
      op.block(a * n, b * n, n, n).diagonal().array() += F(a, b);
    }
  }
  const VectorXd rhs = Eigen::Map<const VectorXd>(R.data(), n * n);
  const VectorXd sol = op.partialPivLu().solve(rhs);
  return Eigen::Map<const MatrixXd>(sol.data(), n, n);
}

}  // namespace lgq
