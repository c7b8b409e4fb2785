#pragma once

#include <optional>

#include <Eigen/Dense>

namespace lgq {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Tolerance on the minimum eigenvalue used by every PSD and uncertainty check.
inline constexpr double kPsdTolerance = 1e-10;

/// Relative asymmetry above which a matrix is refused as "not symmetric".
inline constexpr double kSymmetryTolerance = 1e-10;

/// A Gaussian state in phase space: mean vector and covariance matrix.
struct GaussianState {
  VectorXd mean;
  MatrixXd cov;

  int dimension() const { return static_cast<int>(mean.size()); }
};

/// Block-diagonal symplectic matrix for the ordering (q1, p1, ..., qN, pN).
class SymplecticForm {
 public:
  explicit SymplecticForm(int modes);

  int modes() const { return modes_; }
  int dimension() const { return 2 * modes_; }
  const MatrixXd& matrix() const { return sigma_; }

 private:
  int modes_;
  MatrixXd sigma_;
};

SymplecticForm symplectic_form(int modes);

/// Smallest eigenvalue of the Hermitian matrix cov + i (hbar/2) Sigma.
double uncertainty_margin(const MatrixXd& cov, double hbar);

/// True when cov is a physically allowed quantum covariance.
bool check_uncertainty(const MatrixXd& cov, double hbar);

/**
 * Mix a Gaussian over the mean of another Gaussian kernel.
 *
 * The mean comes from `outer` and the covariances add. This is how a haloed
 * estimate turns into a quantum state once the true-state spread is folded in.
 */
GaussianState gaussian_convolve(const GaussianState& outer, const GaussianState& kernel);

struct PseudoInverse {
  MatrixXd inverse;
  int rank = 0;
  // Rows are eigenvectors, so mat = basis^T * diag(eigenvalues) * basis.
  // Ordered by decreasing |eigenvalue|; the first `rank` rows span the range.
  MatrixXd basis;
  VectorXd eigenvalues;
  double threshold = 0.0;

  /// Orthogonal projector onto the retained eigenvectors.
  MatrixXd range_projector() const;
};

/// Default zero threshold: 1e-9 times the largest |eigenvalue|, floored at 1.
double default_eig_tol(const VectorXd& eigenvalues);

PseudoInverse symmetric_pseudo_inverse(const MatrixXd& mat,
                                       std::optional<double> eig_tol = std::nullopt);

// Small helpers shared by the estimation modules.

MatrixXd symmetrized(const MatrixXd& mat);
double min_eigenvalue(const MatrixXd& symmetric);
bool is_psd(const MatrixXd& symmetric, double tol = kPsdTolerance);

/// Throws InvalidInputError if mat is not symmetric to the given relative tolerance.
void require_symmetric(const MatrixXd& mat, const char* what,
                       double rel_tol = kSymmetryTolerance);

/**
 * Lower-triangular square root of a positive semidefinite matrix.
 *
 * Plain Cholesky breaks down on singular input, which is common for noise
 * covariances built as E*E^T. Columns with a vanishing pivot are set to zero.
 * Throws InvalidModelError if the input is not PSD.
 */
MatrixXd psd_cholesky(const MatrixXd& mat, double tol = kPsdTolerance);

/// Solve F X + X F^T = R for X by a Kronecker-product linear system.
MatrixXd solve_lyapunov(const MatrixXd& F, const MatrixXd& R);

}  // namespace lgq
