#include "hinfsparse/power_method.h"

#include <spdlog/spdlog.h>

#include <cmath>
#include <random>

#include "hinfsparse/errors.h"

namespace hinfsparse {
namespace {

struct Attempt {
  double value = 0.0;
  Eigen::VectorXd vector;
  int iterations = 0;
  bool converged = false;
};

Attempt Iterate(const SymmetricOperator& op, Eigen::VectorXd x, const PowerOptions& opts) {
  Attempt a;
  Eigen::VectorXd y(x.size());
  x.normalize();
  for (int k = 1; k <= opts.max_iters; ++k) {
    op(x, y);
    const double rho = x.dot(y);
    a.iterations = k;
    a.value = rho;
    const double ynorm = y.norm();
    if (ynorm == 0.0) {
      // x lies in the null space; A = 0 on this vector and rho = 0.
      a.vector = x;
      a.converged = true;
      return a;
    }
    const double residual = (y - rho * x).norm();
    if (residual <= opts.tol * std::abs(rho)) {
      a.vector = y / ynorm;
      a.converged = true;
      return a;
    }
    x = y / ynorm;
  }
  a.vector = x;
  return a;
}

}  // namespace

PowerResult PowerMaxEig(const SymmetricOperator& op, int dim, const PowerOptions& opts,
                        const Eigen::VectorXd& start) {
  if (dim < 1) throw DimensionError("operator dimension must be >= 1");
  if (!(opts.tol > 0.0) || opts.max_iters < 1) throw Error("invalid power-method options");
  Eigen::VectorXd x0 =
      start.size() == dim && start.norm() > 0.0 ? start : Eigen::VectorXd::Ones(dim).eval();
  PowerResult out;
  Attempt a = Iterate(op, x0, opts);
  out.iterations = a.iterations;
  if (!a.converged) {
    out.restarted = true;
    std::mt19937_64 rng(opts.restart_seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Eigen::VectorXd x1(dim);
    for (int k = 0; k < dim; ++k) x1(k) = unif(rng);
    a = Iterate(op, x1, opts);
    out.iterations += a.iterations;
  }
  if (a.converged) {
    out.value = a.value;
    out.vector = a.vector;
    return out;
  }
  spdlog::warn("power iteration did not converge in {} iterations; using a dense eigensolver",
               opts.max_iters);
  out.fell_back = true;
  Eigen::MatrixXd A(dim, dim);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim), col(dim);
  for (int k = 0; k < dim; ++k) {
    e(k) = 1.0;
    op(e, col);
    A.col(k) = col;
    e(k) = 0.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  out.value = es.eigenvalues()(dim - 1);
  out.vector = es.eigenvectors().col(dim - 1);
  return out;
}

PowerResult PowerMaxEig(const Eigen::MatrixXd& A, const PowerOptions& opts,
                        const Eigen::VectorXd& start) {
  if (A.rows() != A.cols()) throw DimensionError("matrix must be square");
  return PowerMaxEig([&A](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y.noalias() = A * x; },
                     static_cast<int>(A.rows()), opts, start);
}

}  // namespace hinfsparse
