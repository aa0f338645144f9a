#pragma once

#include <Eigen/Dense>

namespace hinfsparse::linalg {

/// (M + Mᵀ) / 2.
Eigen::MatrixXd Symmetrize(const Eigen::Ref<const Eigen::MatrixXd>& M);

/// Extreme eigenvalues of a symmetric matrix (the upper triangle is not
/// trusted; the matrix is symmetrized first). Throws NumericalError if the
/// eigen-solver fails.
double LambdaMin(const Eigen::Ref<const Eigen::MatrixXd>& M);
double LambdaMax(const Eigen::Ref<const Eigen::MatrixXd>& M);

/// Largest singular value.
double SpectralNorm(const Eigen::Ref<const Eigen::MatrixXd>& M);

/// Principal square root of a symmetric positive semidefinite matrix;
/// eigenvalues below zero (roundoff) are clipped. Throws NumericalError if
/// the most negative eigenvalue is below -tol * (1 + ||M||).
Eigen::MatrixXd PsdSqrt(const Eigen::Ref<const Eigen::MatrixXd>& M, double tol = 1e-8);

/// M^{-1/2} of a symmetric positive definite matrix.
Eigen::MatrixXd PdInvSqrt(const Eigen::Ref<const Eigen::MatrixXd>& M);

/// Inverse of a symmetric positive definite matrix via Cholesky; throws
/// NumericalError if M is not numerically positive definite.
Eigen::MatrixXd PdInverse(const Eigen::Ref<const Eigen::MatrixXd>& M);

/// True if every entry is finite.
bool AllFinite(const Eigen::Ref<const Eigen::MatrixXd>& M);

/// Number of exactly-nonzero entries.
int CountNonzeros(const Eigen::Ref<const Eigen::MatrixXd>& M);

/// Number of entries with |value| > threshold.
int CountAbove(const Eigen::Ref<const Eigen::MatrixXd>& M, double threshold);

}  // namespace hinfsparse::linalg
