#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lgq/classical_model.hpp"
#include "lgq/errors.hpp"
#include "lgq/gaussian_linalg.hpp"

namespace lgq {

using Eigen::MatrixXcd;

/// Quadratic Hamiltonian H = x^T G x / 2 and Lindblad operators c = B x.
struct LgqSystemSpec {
  int modes = 1;
  double hbar = 2.0;
  MatrixXd G;   // 2N x 2N, symmetric
  MatrixXcd B;  // K x 2N

  int channels() const { return static_cast<int>(B.rows()); }
};

/// Unravelling matrices for the observed (Alice) and unobserved (Bob) records.
struct UnravellingSpec {
  MatrixXcd M_o;  // K x K
  MatrixXcd M_u;  // K x K
};

enum class Record { observed, unobserved };

struct Violation {
  std::string constraint;
  std::string record;  // "o", "u" or empty when the constraint spans both
  int channel = -1;    // -1 when not tied to one channel
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool flags(const std::string& constraint) const;
  std::string summary() const;
};

/// Thrown by build_derived_model when validation fails; carries the report.
class RejectedModelError : public Error {
 public:
  explicit RejectedModelError(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

struct ValidationPolicy {
  // Internal no-Bob tests switch this off; user-facing paths never do.
  bool require_unobserved_record = true;
};

// Constraint names used in ValidationReport.
inline constexpr const char* kDiagonalConstraint = "M M^dagger diagonal";
inline constexpr const char* kEfficiencyRange = "0 <= eta <= 1";
inline constexpr const char* kEfficiencySum = "eta_o + eta_u <= 1";
inline constexpr const char* kObservedActive = "at least one eta_o > 0";
inline constexpr const char* kUnobservedActive = "at least one eta_u > 0";
inline constexpr const char* kDimension = "dimension";

ValidationReport validate_unravelling(const UnravellingSpec& spec,
                                      const ValidationPolicy& policy = {});

/// Efficiencies eta_{r,k}: the diagonal of M_r M_r^dagger.
VectorXd efficiencies(const MatrixXcd& M);

/// Real matrices that drive every moment equation.
struct DerivedModel {
  int modes = 1;
  int channels = 0;
  double hbar = 2.0;
  MatrixXd A;
  MatrixXd D;
  MatrixXd C_o, C_u;          // K x 2N
  MatrixXd Gamma_o, Gamma_u;  // K x 2N, enters the equations transposed
  MatrixXd Sigma;

  int state_dim() const { return 2 * modes; }
  const MatrixXd& C(Record r) const { return r == Record::observed ? C_o : C_u; }
  const MatrixXd& Gamma(Record r) const { return r == Record::observed ? Gamma_o : Gamma_u; }

  /// K_r^+[V] = V C_r^T + Gamma_r^T.
  MatrixXd gain(const MatrixXd& V, Record r) const;

  /// The classical engine's view of one record: (A, D, C_r, Gamma_r).
  ClassicalModel record_model(Record r) const;
};

DerivedModel build_derived_model(const LgqSystemSpec& sys, const UnravellingSpec& unr,
                                 const ValidationPolicy& policy = {});

// Homodyne shorthand: M = diag(sqrt(eta_k) exp(i theta_k)).
struct HomodyneChannel {
  double eta = 0.0;
  double theta = 0.0;

  bool operator==(const HomodyneChannel&) const = default;
};

MatrixXcd homodyne_matrix(const std::vector<HomodyneChannel>& channels);

/// Observer settings for the two-channel example: gamma-channel then kappa-channel.
struct ExampleObserver {
  HomodyneChannel gamma;
  HomodyneChannel kappa;
};

/// The example system: H = chi (qp + pq)/2, c1 ~ q + ip at rate gamma, c2 ~ q at rate g.
/// Units: hbar = 2, time in 1/chi, gamma = chi = 1.
LgqSystemSpec example_system(double g);

struct ExampleSpec {
  LgqSystemSpec system;
  UnravellingSpec unravelling;
};

ExampleSpec preset_paper_example(double g, const ExampleObserver& observed,
                                 const ExampleObserver& unobserved);

}  // namespace lgq
