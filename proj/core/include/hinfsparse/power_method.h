#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

namespace hinfsparse {

/// y = A x for a symmetric positive semidefinite A that is never formed.
using SymmetricOperator = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& y)>;

struct PowerOptions {
  /// Converged once ‖A x − ρ x‖ ≤ tol·ρ for the Rayleigh quotient ρ.
  double tol = 1e-8;
  int max_iters = 1000;
  /// Seed of the single restart vector used after a stalled first attempt.
  std::uint64_t restart_seed = 0x9e3779b97f4a7c15ULL;
};

struct PowerResult {
  double value = 0.0;
  Eigen::VectorXd vector;
  int iterations = 0;
  bool restarted = false;
  /// Both attempts stalled and the value came from a dense eigensolver.
  bool fell_back = false;
};

/// Largest eigenvalue of a symmetric positive semidefinite operator. The first
/// attempt starts from `start` (normalized all-ones when empty); if it does
/// not converge within max_iters, one attempt from a fixed pseudo-random
/// vector follows, and after that the operator is formed column by column and
/// handed to a dense symmetric eigensolver (with a logged warning).
PowerResult PowerMaxEig(const SymmetricOperator& op, int dim, const PowerOptions& opts = {},
                        const Eigen::VectorXd& start = Eigen::VectorXd());

PowerResult PowerMaxEig(const Eigen::MatrixXd& A, const PowerOptions& opts = {},
                        const Eigen::VectorXd& start = Eigen::VectorXd());

}  // namespace hinfsparse
