#include "hinfsparse/power_method.h"

#include <gtest/gtest.h>

#include <random>

#include "test_util.h"

namespace hinfsparse {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST(PowerMethodTest, Identity) {
  const PowerResult r = PowerMaxEig(MatrixXd::Identity(5, 5));
  EXPECT_NEAR(r.value, 1.0, 1e-14);
  EXPECT_FALSE(r.restarted);
}

TEST(PowerMethodTest, DiagonalConvergesQuickly) {
  const MatrixXd D = Eigen::Vector3d(3, 1, 1).asDiagonal();
  const PowerResult r = PowerMaxEig(D);
  EXPECT_NEAR(r.value, 3.0, 1e-8 * 3.0);
  EXPECT_LE(r.iterations, 30);
  EXPECT_NEAR(std::abs(r.vector(0)), 1.0, 1e-8);
}

TEST(PowerMethodTest, RandomSpdMatchesDenseSolver) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 50; ++k) {
    const MatrixXd S = test::RandomSpd(8, rng, 0.1);
    const double expected = test::DenseLambdaMax(S);
    EXPECT_NEAR(PowerMaxEig(S).value / expected, 1.0, 1e-6);
  }
}

TEST(PowerMethodTest, OperatorFormMatchesMatrixForm) {
  std::mt19937_64 rng(2);
  const MatrixXd S = test::RandomSpd(10, rng);
  const SymmetricOperator op = [&S](const VectorXd& x, VectorXd& y) { y = S * x; };
  const PowerResult a = PowerMaxEig(op, 10);
  const PowerResult b = PowerMaxEig(S);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(PowerMethodTest, StalledStartTriggersSeededRestart) {
  // The start vector hides the top eigenvector behind a slowly separating
  // pair, so the first attempt cannot finish in 30 iterations.
  const MatrixXd D = Eigen::Vector3d(1.0, 0.5, 0.49).asDiagonal();
  PowerOptions opts;
  opts.max_iters = 30;
  opts.tol = 1e-6;
  const VectorXd start = Eigen::Vector3d(1e-12, 1.0, 1.0);
  const PowerResult r = PowerMaxEig(D, opts, start);
  EXPECT_TRUE(r.restarted);
  EXPECT_FALSE(r.fell_back);
  EXPECT_NEAR(r.value, 1.0, 1e-6);
  // Deterministic: the restart vector depends only on the seed.
  const PowerResult again = PowerMaxEig(D, opts, start);
  EXPECT_EQ(r.value, again.value);
  EXPECT_EQ(r.vector, again.vector);
}

TEST(PowerMethodTest, FallsBackToDenseSolver) {
  // Relative gap 1e-3 keeps the residual above tol for far more than 50 steps.
  const MatrixXd D = Eigen::Vector4d(1.0, 0.999, 0.5, 0.1).asDiagonal();
  PowerOptions opts;
  opts.max_iters = 50;
  const PowerResult r = PowerMaxEig(D, opts);
  EXPECT_TRUE(r.restarted);
  EXPECT_TRUE(r.fell_back);
  EXPECT_NEAR(r.value, 1.0, 1e-12);
}

}  // namespace
}  // namespace hinfsparse
