#include "hinfsparse/sdp.h"

#include <gtest/gtest.h>

#include <random>

#include "hinfsparse/errors.h"
#include "test_util.h"

namespace hinfsparse::sdp {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST(SdpProblemTest, ScalarLayout) {
  SdpProblem p;
  const int S = p.AddSymmetric("S", 3);
  const int M = p.AddMatrix("M", 2, 2);
  EXPECT_EQ(p.NumScalars(), 6 + 4);
  EXPECT_EQ(p.ScalarIndex(S, 0, 0), 0);
  EXPECT_EQ(p.ScalarIndex(S, 0, 1), 1);
  EXPECT_EQ(p.ScalarIndex(S, 1, 0), 1);
  EXPECT_EQ(p.ScalarIndex(S, 1, 1), 2);
  EXPECT_EQ(p.ScalarIndex(S, 2, 2), 5);
  EXPECT_EQ(p.ScalarIndex(M, 0, 1), 7);
  EXPECT_EQ(p.ScalarIndex(M, 1, 0), 8);

  VectorXd y = VectorXd::LinSpaced(10, 1, 10);
  const MatrixXd Sv = p.Value(S, y);
  EXPECT_EQ(Sv, Sv.transpose());
  EXPECT_EQ(Sv(2, 1), y(4));
  EXPECT_EQ(p.Value(M, y)(1, 1), y(9));
}

TEST(SdpProblemTest, EvaluateMatchesMap) {
  SdpProblem p;
  const int S = p.AddSymmetric("S", 2);
  const MatrixXd A = (MatrixXd(2, 2) << 1, 2, 0, -1).finished();
  auto map = [&](const Assignment& v) -> MatrixXd {
    return A.transpose() * v[S] + v[S] * A + MatrixXd::Identity(2, 2);
  };
  p.AddPsdConstraint("lyap", 2, map);
  VectorXd y(3);
  y << 0.3, -1.2, 2.5;
  const MatrixXd Sv = p.Value(S, y);
  EXPECT_LT((p.Evaluate(0, y) - (A.transpose() * Sv + Sv * A + MatrixXd::Identity(2, 2))).norm(),
            1e-14);
}

TEST(SdpProblemTest, NonSymmetricMapThrows) {
  SdpProblem p;
  const int M = p.AddMatrix("M", 2, 2);
  EXPECT_THROW(p.AddPsdConstraint("bad", 2, [&](const Assignment& v) { return v[M]; }),
               DimensionError);
  EXPECT_THROW(
      p.AddPsdConstraint("size", 3, [&](const Assignment&) { return MatrixXd::Identity(2, 2); }),
      DimensionError);
}

TEST(SdpProblemTest, AssemblyIsDeterministic) {
  auto build = [] {
    SdpProblem p;
    const int S = p.AddSymmetric("S", 3);
    p.AddPsdConstraint("c", 3, [&](const Assignment& v) -> MatrixXd { return v[S]; });
    p.SetObjective(S, MatrixXd::Identity(3, 3));
    return p;
  };
  EXPECT_TRUE(build() == build());
}

TEST(InteriorPointSolverTest, SmallestEigenvalue) {
  std::mt19937_64 rng(1);
  const MatrixXd M = test::RandomSpd(5, rng) - MatrixXd::Identity(5, 5);
  SdpProblem p;
  const int t = p.AddScalar("t");
  p.AddPsdConstraint("M - tI", 5, [&](const Assignment& v) -> MatrixXd {
    return M - v[t](0, 0) * MatrixXd::Identity(5, 5);
  });
  p.SetObjective(p.ScalarIndex(t, 0, 0), -1.0);
  const SolveResult r = InteriorPointSolver().Solve(p);
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_NEAR(r.y(0), test::DenseLambdaMin(M), 1e-7);
}

TEST(InteriorPointSolverTest, MinimalTraceLyapunovSolution) {
  // min tr P s.t. AᵀP + PA + I ⪯ 0: the optimum is the Lyapunov solution.
  std::mt19937_64 rng(2);
  const int n = 4;
  const MatrixXd A = test::RandomHurwitz(n, rng);
  SdpProblem p;
  const int P = p.AddSymmetric("P", n);
  p.AddPsdConstraint("lyap", n, [&](const Assignment& v) -> MatrixXd {
    return -(A.transpose() * v[P] + v[P] * A + MatrixXd::Identity(n, n));
  });
  p.SetObjective(P, MatrixXd::Identity(n, n));
  const SolveResult r = InteriorPointSolver().Solve(p);
  ASSERT_EQ(r.status, SolveStatus::kOptimal);

  const MatrixXd I = MatrixXd::Identity(n, n);
  // Kronecker oracle: (I⊗Aᵀ + Aᵀ⊗I) vec(P) = −vec(I).
  MatrixXd L = MatrixXd::Zero(n * n, n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      L.block(i * n, j * n, n, n) += (i == j ? 1.0 : 0.0) * A.transpose();
      L.block(i * n, j * n, n, n) += A(j, i) * I;
    }
  }
  const VectorXd vecP = L.fullPivLu().solve(-Eigen::Map<const VectorXd>(I.data(), n * n));
  const MatrixXd Pstar = Eigen::Map<const MatrixXd>(vecP.data(), n, n);
  EXPECT_LT((p.Value(P, r.y) - Pstar).norm(), 1e-5 * Pstar.norm());
}

TEST(InteriorPointSolverTest, LinearProgram) {
  // min x1 + x2 s.t. x ≥ 0, x1 + 2 x2 ≥ 2 → 1 at (0, 1).
  SdpProblem p;
  const int x = p.AddMatrix("x", 2, 1);
  p.AddNonnegative("rows", 3, [&](const Assignment& v) -> VectorXd {
    const MatrixXd xv = v[x];
    return (VectorXd(3) << xv(0, 0), xv(1, 0), xv(0, 0) + 2 * xv(1, 0) - 2).finished();
  });
  p.SetObjective(x, MatrixXd::Ones(2, 1));
  const SolveResult r = InteriorPointSolver().Solve(p);
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_NEAR(r.primal_objective, 1.0, 1e-7);
  EXPECT_NEAR(r.y(1), 1.0, 1e-6);
}

TEST(InteriorPointSolverTest, AbsoluteValueSlacksWithPsdBlock) {
  // min t1 + t2 s.t. t ≥ ±x, |x1 − 2| ≤ 1, |x2 − 0.5| ≤ 1 (as 2×2 PSD blocks).
  SdpProblem p;
  const int x = p.AddMatrix("x", 2, 1);
  const int t = p.AddMatrix("t", 2, 1);
  p.AddNonnegative("abs", 4, [&](const Assignment& v) -> VectorXd {
    const MatrixXd xv = v[x], tv = v[t];
    return (VectorXd(4) << tv(0, 0) - xv(0, 0), tv(0, 0) + xv(0, 0), tv(1, 0) - xv(1, 0),
            tv(1, 0) + xv(1, 0))
        .finished();
  });
  const double centers[2] = {2.0, 0.5};
  for (int k = 0; k < 2; ++k) {
    p.AddPsdConstraint("ball", 2, [&, k](const Assignment& v) -> MatrixXd {
      const double d = v[x](k, 0) - centers[k];
      return (MatrixXd(2, 2) << 1, d, d, 1).finished();
    });
  }
  p.SetObjective(t, MatrixXd::Ones(2, 1));
  const SolveResult r = InteriorPointSolver().Solve(p);
  ASSERT_TRUE(IsUsable(r));
  EXPECT_NEAR(r.primal_objective, 1.0, 1e-6);
  EXPECT_NEAR(p.Value(x, r.y)(0, 0), 1.0, 1e-5);
  EXPECT_NEAR(p.Value(x, r.y)(1, 0), 0.0, 1e-5);
}

// min sum |G_ij| - <W, G> s.t. ||L1 G L2|| <= 1. Every coefficient of the
// norm block is a dense rank-two matrix, which takes the factored Schur path.
// Adding a scalar pinned to zero whose coefficient has full rank forces the
// entrywise path on the same problem.
SolveResult NormBallProblem(bool force_entrywise) {
  std::mt19937_64 rng(4);
  const int k = 6;
  const MatrixXd L1 = test::RandomSpd(k, rng);
  const MatrixXd L2 = test::RandomSpd(k, rng);
  const MatrixXd W = test::RandomMatrix(k, k, rng);
  SdpProblem p;
  const int G = p.AddMatrix("G", k, k);
  const int T = p.AddMatrix("T", k, k);
  const int z = p.AddScalar("z");
  p.AddPsdConstraint("norm", 2 * k, [&](const Assignment& v) -> MatrixXd {
    MatrixXd E = MatrixXd::Identity(2 * k, 2 * k);
    E.topRightCorner(k, k) = L1 * v[G] * L2;
    E.bottomLeftCorner(k, k) = E.topRightCorner(k, k).transpose();
    if (force_entrywise) E += v[z](0, 0) * MatrixXd::Identity(2 * k, 2 * k);
    return E;
  });
  p.AddNonnegative("abs", 2 * k * k + 2, [&](const Assignment& v) -> VectorXd {
    const MatrixXd g = v[G], t = v[T];
    VectorXd out(2 * k * k + 2);
    for (int i = 0; i < k * k; ++i) {
      out(2 * i) = t(i) - g(i);
      out(2 * i + 1) = t(i) + g(i);
    }
    out(2 * k * k) = v[z](0, 0);
    out(2 * k * k + 1) = -v[z](0, 0);
    return out;
  });
  p.SetObjective(T, 0.01 * MatrixXd::Ones(k, k));
  for (int i = 0; i < k * k; ++i) p.SetObjective(p.ScalarIndex(G, i % k, i / k), -W(i));
  return InteriorPointSolver().Solve(p);
}

TEST(InteriorPointSolverTest, FactoredSchurMatchesEntrywise) {
  const SolveResult factored = NormBallProblem(false);
  const SolveResult entrywise = NormBallProblem(true);
  ASSERT_TRUE(IsUsable(factored));
  ASSERT_TRUE(IsUsable(entrywise));
  EXPECT_NEAR(factored.primal_objective, entrywise.primal_objective,
              1e-6 * std::abs(entrywise.primal_objective));
  EXPECT_LT((factored.y.head(72) - entrywise.y.head(72)).norm(), 1e-4);
}

TEST(InteriorPointSolverTest, DetectsInfeasibility) {
  // x ≥ 1 and −x ≥ 0.
  SdpProblem p;
  const int x = p.AddScalar("x");
  p.AddNonnegative("rows", 2, [&](const Assignment& v) -> VectorXd {
    return (VectorXd(2) << v[x](0, 0) - 1.0, -v[x](0, 0)).finished();
  });
  p.SetObjective(p.ScalarIndex(x, 0, 0), 1.0);
  EXPECT_EQ(InteriorPointSolver().Solve(p).status, SolveStatus::kInfeasible);
}

TEST(InteriorPointSolverTest, RepeatSolveIsBitwiseIdentical) {
  std::mt19937_64 rng(3);
  const MatrixXd M = test::RandomSpd(4, rng);
  SdpProblem p;
  const int t = p.AddScalar("t");
  p.AddPsdConstraint("c", 4, [&](const Assignment& v) -> MatrixXd {
    return M - v[t](0, 0) * MatrixXd::Identity(4, 4);
  });
  p.SetObjective(0, -1.0);
  EXPECT_EQ(InteriorPointSolver().Solve(p).y, InteriorPointSolver().Solve(p).y);
}

}  // namespace
}  // namespace hinfsparse::sdp
