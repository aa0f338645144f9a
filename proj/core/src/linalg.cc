#include "hinfsparse/linalg.h"

#include <cmath>
#include <limits>

#include "hinfsparse/errors.h"

namespace hinfsparse::linalg {
namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> Eig(const Eigen::Ref<const Eigen::MatrixXd>& M,
                                                   bool vectors) {
  if (M.rows() != M.cols()) {
    throw DimensionError("symmetric eigen-decomposition of a non-square matrix");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      Symmetrize(M), vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericalError("symmetric eigen-solver did not converge");
  }
  return es;
}

}  // namespace

Eigen::MatrixXd Symmetrize(const Eigen::Ref<const Eigen::MatrixXd>& M) {
  return 0.5 * (M + M.transpose());
}

double LambdaMin(const Eigen::Ref<const Eigen::MatrixXd>& M) {
  if (M.size() == 0) return std::numeric_limits<double>::infinity();
  return Eig(M, false).eigenvalues()(0);
}

double LambdaMax(const Eigen::Ref<const Eigen::MatrixXd>& M) {
  if (M.size() == 0) return -std::numeric_limits<double>::infinity();
  const auto es = Eig(M, false);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

double SpectralNorm(const Eigen::Ref<const Eigen::MatrixXd>& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()(0);
}

Eigen::MatrixXd PsdSqrt(const Eigen::Ref<const Eigen::MatrixXd>& M, double tol) {
  if (M.size() == 0) return Eigen::MatrixXd(M.rows(), M.cols());
  const auto es = Eig(M, true);
  const Eigen::VectorXd& w = es.eigenvalues();
  const double scale = 1.0 + std::abs(w(w.size() - 1));
  if (w(0) < -tol * scale) {
    throw NumericalError("square root of an indefinite matrix requested");
  }
  const Eigen::VectorXd root = w.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd PdInvSqrt(const Eigen::Ref<const Eigen::MatrixXd>& M) {
  if (M.size() == 0) return Eigen::MatrixXd(M.rows(), M.cols());
  const auto es = Eig(M, true);
  const Eigen::VectorXd& w = es.eigenvalues();
  if (!(w(0) > 0.0)) {
    throw NumericalError("inverse square root of a non-positive-definite matrix");
  }
  const Eigen::VectorXd root = w.cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd PdInverse(const Eigen::Ref<const Eigen::MatrixXd>& M) {
  if (M.rows() != M.cols()) throw DimensionError("inverse of a non-square matrix");
  if (M.size() == 0) return Eigen::MatrixXd(0, 0);
  Eigen::LLT<Eigen::MatrixXd> llt(Symmetrize(M));
  if (llt.info() != Eigen::Success) {
    throw NumericalError("matrix is not numerically positive definite");
  }
  return Symmetrize(llt.solve(Eigen::MatrixXd::Identity(M.rows(), M.cols())));
}

bool AllFinite(const Eigen::Ref<const Eigen::MatrixXd>& M) { return M.allFinite(); }

int CountNonzeros(const Eigen::Ref<const Eigen::MatrixXd>& M) {
  return static_cast<int>((M.array() != 0.0).count());
}

int CountAbove(const Eigen::Ref<const Eigen::MatrixXd>& M, double threshold) {
  return static_cast<int>((M.array().abs() > threshold).count());
}

}  // namespace hinfsparse::linalg
