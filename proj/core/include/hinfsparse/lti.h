#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace hinfsparse {

/// Continuous-time plant
///   ẋ = A x + B u + Bv v
///   y = C x + Dgu u + Dgv v
/// with state dimension n, m inputs, mv disturbances and p outputs.
struct StateSpaceSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd Bv;
  Eigen::MatrixXd C;
  Eigen::MatrixXd Dgu;
  Eigen::MatrixXd Dgv;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int mv() const { return static_cast<int>(Bv.cols()); }
  int p() const { return static_cast<int>(C.rows()); }

  /// Throws DimensionError on inconsistent shapes and Error on non-finite
  /// entries.
  void Validate() const;
};

/// Static state feedback u = F x, F is m×n.
struct FeedbackGain {
  Eigen::MatrixXd F;

  int rows() const { return static_cast<int>(F.rows()); }
  int cols() const { return static_cast<int>(F.cols()); }
  int Nonzeros() const;
};

/// Realization of the disturbance-to-output map under u = F x.
struct ClosedLoopSystem {
  Eigen::MatrixXd Acl;
  Eigen::MatrixXd Bcl;
  Eigen::MatrixXd Ccl;
  Eigen::MatrixXd Dcl;
};

struct HinfResult {
  /// +infinity exactly when Acl is not Hurwitz.
  double value = 0.0;
  /// Certified upper end of the final bracket (value <= true norm <= upper).
  double upper = 0.0;
  bool converged = false;
  double peak_frequency = 0.0;
  int iterations = 0;
};

/// Acl = A + B F, Bcl = Bv, Ccl = C + Dgu F, Dcl = Dgv.
ClosedLoopSystem CloseLoop(const StateSpaceSystem& sys, const FeedbackGain& F);

/// True iff every eigenvalue of M has real part < -margin.
bool IsHurwitz(const Eigen::Ref<const Eigen::MatrixXd>& M, double margin = 0.0);

/// Largest real part over the spectrum of M.
double SpectralAbscissa(const Eigen::Ref<const Eigen::MatrixXd>& M);

/// σ_max(Ccl (jωI − Acl)⁻¹ Bcl + Dcl). Returns +infinity if jωI − Acl is
/// numerically singular.
double SigmaMaxAt(const ClosedLoopSystem& cl, double omega);

/// H∞ norm by bracketing and Hamiltonian-eigenvalue tests. The lower end of
/// the bracket starts at max(σ_max(Dcl), a 64-point log-grid scan) and only
/// ever grows by evaluating σ_max at frequencies suggested by purely
/// imaginary Hamiltonian eigenvalues; the upper end is certified by a
/// Hamiltonian with no imaginary-axis eigenvalues. Iteration stops when the
/// bracket is within rel_tol.
HinfResult HinfNorm(const ClosedLoopSystem& cl, double rel_tol = 1e-9);

/// max over grid of σ_max(G(jω)); points where jωI − Acl is singular are
/// skipped with a warning. Always a lower bound on the H∞ norm.
double HinfNormGrid(const ClosedLoopSystem& cl, std::span<const double> grid);

/// count logarithmically spaced points on [lo, hi].
std::vector<double> LogGrid(double lo, double hi, int count);

/// The default oracle grid: 10⁵ points on [10⁻⁴, 10⁴] rad/s.
std::vector<double> DefaultOracleGrid();

}  // namespace hinfsparse
