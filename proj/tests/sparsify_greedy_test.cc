#include "hinfsparse/sparsify_greedy.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hinfsparse/errors.h"
#include "hinfsparse/linalg.h"
#include "test_util.h"

namespace hinfsparse {
namespace {

using Eigen::MatrixXd;

EllipsoidRegion Region(const MatrixXd& F_o, double r = 1.0) {
  const int m = static_cast<int>(F_o.rows()), n = static_cast<int>(F_o.cols());
  return EllipsoidRegion::FromParts(F_o, MatrixXd::Identity(n, n), r * MatrixXd::Identity(m, m),
                                    1.0);
}

// Dense E after zeroing entry (i, j) of the state's gain.
MatrixXd DenseEliminated(const GreedyState& s, int i, int j) {
  const int m = static_cast<int>(s.F.rows());
  MatrixXd E = s.E;
  E(i, m + j) = E(m + j, i) = s.E(i, m + j) - s.F(i, j);
  return E;
}

class SynthesizedGreedyTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    std::mt19937_64 rng(21);
    sys_ = new StateSpaceSystem(test::RandomPlant(5, 3, rng));
    region_ = new EllipsoidRegion(SynthesizeRegion(*sys_, 1.5).region);
  }
  static void TearDownTestSuite() {
    delete sys_;
    delete region_;
  }
  static StateSpaceSystem* sys_;
  static EllipsoidRegion* region_;
};
StateSpaceSystem* SynthesizedGreedyTest::sys_ = nullptr;
EllipsoidRegion* SynthesizedGreedyTest::region_ = nullptr;

TEST(GreedyConfigTest, Validation) {
  GreedyConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.theta = 0.0;
  EXPECT_THROW(c.Validate(), Error);
  c = {};
  c.power_tol = 0.0;
  EXPECT_THROW(c.Validate(), Error);
  c = {};
  c.recompute_period = 0;
  EXPECT_THROW(c.Validate(), Error);
}

TEST(InitStateTest, BlockDiagonalStart) {
  std::mt19937_64 rng(1);
  const EllipsoidRegion r = EllipsoidRegion::FromParts(
      test::RandomMatrix(2, 3, rng), test::RandomSpd(3, rng), test::RandomSpd(2, rng), 1.0);
  const GreedyState s = InitState(r, 0.6);
  EXPECT_EQ(s.F, r.F_o);
  EXPECT_EQ(s.E.topRightCorner(2, 3), MatrixXd::Zero(2, 3));
  EXPECT_LT((s.Einv * s.E - MatrixXd::Identity(5, 5)).norm(), 1e-10);
  EXPECT_NEAR(test::DenseLambdaMin(s.E),
              std::min(0.6 * test::DenseLambdaMin(r.R), test::DenseLambdaMin(r.Zinv)), 1e-12);
  EXPECT_EQ(s.support.size(), 6u);
  EXPECT_EQ(s.support.front(), std::make_pair(0, 0));
  EXPECT_EQ(s.support[1], std::make_pair(0, 1));
}

TEST(InitStateTest, DegenerateInputsThrow) {
  const EllipsoidRegion r = Region(MatrixXd::Ones(2, 2));
  EXPECT_THROW(InitState(r, 0.0), DegenerateRegion);
  EllipsoidRegion singular = r;
  singular.R(1, 1) = 0.0;
  EXPECT_THROW(InitState(singular, 0.5), DegenerateRegion);
}

TEST(RankTwoUpdateTest, VectorsAndIdentity) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> dim(1, 6);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = dim(rng), n = dim(rng);
    const int i = std::uniform_int_distribution<int>(0, m - 1)(rng);
    const int j = std::uniform_int_distribution<int>(0, n - 1)(rng);
    const double f = normal(rng);
    const RankTwoUpdate u = RankTwoUpdate::Eliminate(m, n, i, j, f);
    ASSERT_NEAR(u.v1.norm(), 1.0, 1e-15);
    ASSERT_NEAR(u.v2.norm(), 1.0, 1e-15);
    ASSERT_NEAR(u.v1.dot(u.v2), 0.0, 1e-15);
    ASSERT_EQ(u.H(0, 0), -f);
    ASSERT_EQ(u.H(1, 1), f);

    // Direct form: E − f·[[0, Δ], [Δᵀ, 0]] versus E + V H Vᵀ.
    const MatrixXd E = test::RandomSpd(m + n, rng);
    MatrixXd direct = E;
    direct(i, m + j) -= f;
    direct(m + j, i) -= f;
    const MatrixXd V = u.V();
    const MatrixXd low_rank = E + V * u.H * V.transpose();
    ASSERT_LT((direct - low_rank).cwiseAbs().maxCoeff(), 1e-12);
    ASSERT_LT(
        (EliminationPerturbation(m, n, i, j, f) - V * u.H * V.transpose()).cwiseAbs().maxCoeff(),
        1e-12);
  }
}

TEST(ApplyUpdateTest, MatchesDenseInverse) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const MatrixXd E = test::RandomSpd(6, rng);
    const int i = std::uniform_int_distribution<int>(0, 1)(rng);
    const int j = std::uniform_int_distribution<int>(0, 3)(rng);
    const double f = 0.3 * std::normal_distribution<double>()(rng);
    const RankTwoUpdate u = RankTwoUpdate::Eliminate(2, 4, i, j, f);
    const MatrixXd updated = E + EliminationPerturbation(2, 4, i, j, f);
    const MatrixXd expected = updated.inverse();
    EXPECT_LT((ApplyUpdate(E.inverse(), u) - expected).norm() / expected.norm(), 1e-8);
  }
}

TEST(ApplyUpdateTest, InvolutionAndContinuity) {
  std::mt19937_64 rng(4);
  const MatrixXd E = test::RandomSpd(6, rng);
  const MatrixXd Einv = E.inverse();
  const MatrixXd once = ApplyUpdate(Einv, RankTwoUpdate::Eliminate(3, 3, 1, 2, 0.4));
  const MatrixXd back = ApplyUpdate(once, RankTwoUpdate::Eliminate(3, 3, 1, 2, -0.4));
  EXPECT_LT((back - Einv).norm() / Einv.norm(), 1e-8);
  const MatrixXd tiny = ApplyUpdate(Einv, RankTwoUpdate::Eliminate(3, 3, 0, 0, 1e-12));
  EXPECT_LE((tiny - Einv).norm() / Einv.norm(), 1e-9);
  EXPECT_THROW(ApplyUpdate(Einv, RankTwoUpdate::Eliminate(3, 3, 0, 0, 0.0)), SingularUpdate);
}

TEST(ApplyUpdateTest, SingularCapacitanceThrows) {
  // Zeroing the off-diagonal of I with f = −1 gives the singular [[1, 1], [1, 1]].
  const MatrixXd E = MatrixXd::Identity(2, 2);
  EXPECT_THROW(ApplyUpdate(E, RankTwoUpdate::Eliminate(1, 1, 0, 0, -1.0)), SingularUpdate);
}

TEST(CandidateIsPdTest, AgreesWithDenseEigenvalues) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  int agree = 0, positive = 0, evaluated = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const MatrixXd E = test::RandomSpd(5, rng, 0.05);
    const int i = std::uniform_int_distribution<int>(0, 1)(rng);
    const int j = std::uniform_int_distribution<int>(0, 2)(rng);
    const double f = 0.8 * normal(rng);
    const double lmin = test::DenseLambdaMin(E + EliminationPerturbation(2, 3, i, j, f));
    if (std::abs(lmin) < 1e-10) continue;
    ++evaluated;
    const bool pd = CandidateIsPd(E.inverse(), RankTwoUpdate::Eliminate(2, 3, i, j, f));
    agree += pd == (lmin > 0.0) ? 1 : 0;
    positive += lmin > 0.0 ? 1 : 0;
  }
  EXPECT_EQ(agree, evaluated);
  EXPECT_GT(positive, 100);
  EXPECT_LT(positive, evaluated - 100);
}

TEST(CandidateIsPdTest, ScalarBlockExamples) {
  // m = n = 1, R = Z = 1, θ = 1: zeroing F = F_o = 2 moves 2 away from the
  // center, outside the unit ellipsoid.
  const EllipsoidRegion r = Region(MatrixXd::Constant(1, 1, 2.0));
  const GreedyState s = InitState(r, 1.0);
  const RankTwoUpdate u = RankTwoUpdate::Eliminate(1, 1, 0, 0, 2.0);
  EXPECT_FALSE(CandidateIsPd(s.Einv, u));
  EXPECT_LT(test::DenseLambdaMin(DenseEliminated(s, 0, 0)), 0.0);
  EXPECT_TRUE(CandidateIsPd(s.Einv, RankTwoUpdate::Eliminate(1, 1, 0, 0, 0.0)));
}

TEST(ScoreTest, IdentityValues) {
  const MatrixXd I = MatrixXd::Identity(5, 5);
  EXPECT_NEAR(Score(I, GreedyCriterion::kMaxEig), 1.0, 1e-12);
  EXPECT_NEAR(Score(I, GreedyCriterion::kTrace), 5.0, 1e-12);
  EXPECT_NEAR(Score(I, GreedyCriterion::kLogDet), 0.0, 1e-12);
  const MatrixXd D = Eigen::Vector3d(3, 1, 1).asDiagonal();
  EXPECT_NEAR(Score(D, GreedyCriterion::kMaxEig), 3.0, 3e-8);
  EXPECT_NEAR(Score(D, GreedyCriterion::kLogDet), std::log(3.0), 1e-12);
}

TEST(StepTest, SingleSupportEntry) {
  MatrixXd F_o = MatrixXd::Zero(2, 2);
  F_o(1, 0) = 0.3;
  const std::optional<GreedyChoice> c = Step(InitState(Region(F_o), 1.0), {});
  ASSERT_TRUE(c.has_value());
  EXPECT_EQ(c->i, 1);
  EXPECT_EQ(c->j, 0);
}

TEST(StepTest, HandBuiltPairPicksDenseArgmin) {
  const MatrixXd F_o = (MatrixXd(1, 2) << 0.1, 0.6).finished();
  const GreedyState s = InitState(Region(F_o), 1.0);
  const double l00 = test::DenseLambdaMax(DenseEliminated(s, 0, 0).inverse());
  const double l01 = test::DenseLambdaMax(DenseEliminated(s, 0, 1).inverse());
  ASSERT_LT(l00, l01);
  const std::optional<GreedyChoice> c = Step(s, {});
  ASSERT_TRUE(c.has_value());
  EXPECT_EQ(c->j, 0);
  EXPECT_NEAR(c->score, l00, 1e-7 * l00);
}

TEST(StepTest, NoAdmissibleCandidate) {
  // Center far from every coordinate hyperplane relative to the radius; start
  // from a near-boundary point of the ellipsoid.
  const MatrixXd F_o = MatrixXd::Constant(2, 2, 5.0);
  const EllipsoidRegion r = Region(F_o, 0.01);
  std::mt19937_64 rng(6);
  MatrixXd U = test::RandomMatrix(2, 2, rng);
  U *= (1 - 1e-6) / linalg::SpectralNorm(U);
  GreedyState s = InitState(r, 1.0);
  s.F = SampleBoundary(r, 1.0, U).F;
  s.E = SchurConstraint(r, FeedbackGain{s.F}, 1.0);
  s.Einv = s.E.inverse();
  EXPECT_FALSE(Step(s, {}).has_value());
}

TEST(StepTest, TiesGoToRowMajorFirst) {
  const MatrixXd F_o = MatrixXd::Constant(1, 2, 0.3);
  const std::optional<GreedyChoice> c = Step(InitState(Region(F_o), 1.0), {});
  ASSERT_TRUE(c.has_value());
  EXPECT_EQ(c->j, 0);
}

TEST(StepTest, ScoresMatchDenseUpdatedInverse) {
  std::mt19937_64 rng(7);
  const EllipsoidRegion r = EllipsoidRegion::FromParts(
      0.3 * test::RandomMatrix(2, 3, rng), test::RandomSpd(3, rng), test::RandomSpd(2, rng), 1.0);
  const GreedyState s = InitState(r, 1.0);
  for (GreedyCriterion crit :
       {GreedyCriterion::kMaxEig, GreedyCriterion::kTrace, GreedyCriterion::kLogDet}) {
    GreedyConfig cfg;
    cfg.criterion = crit;
    const std::optional<GreedyChoice> c = Step(s, cfg);
    ASSERT_TRUE(c.has_value());
    // Exhaustive dense oracle over admissible candidates.
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [i, j] : s.support) {
      const MatrixXd E = DenseEliminated(s, i, j);
      if (test::DenseLambdaMin(E) <= 0.0) continue;
      best = std::min(best, Score(E.inverse(), crit, cfg));
    }
    EXPECT_NEAR(c->score, best, 1e-7 * std::max(1.0, std::abs(best)));
    EXPECT_NEAR(c->score, Score(DenseEliminated(s, c->i, c->j).inverse(), crit, cfg),
                1e-7 * std::max(1.0, std::abs(best)));
  }
}

TEST(StepTest, MaxEigChoiceMaximizesLambdaMinOfE) {
  std::mt19937_64 rng(8);
  const EllipsoidRegion r = EllipsoidRegion::FromParts(
      0.3 * test::RandomMatrix(3, 3, rng), test::RandomSpd(3, rng), test::RandomSpd(3, rng), 1.0);
  const GreedyState s = InitState(r, 0.8);
  const std::optional<GreedyChoice> c = Step(s, {});
  ASSERT_TRUE(c.has_value());
  double best = -1.0;
  for (const auto& [i, j] : s.support) {
    best = std::max(best, test::DenseLambdaMin(DenseEliminated(s, i, j)));
  }
  EXPECT_NEAR(test::DenseLambdaMin(DenseEliminated(s, c->i, c->j)), best, 1e-8);
}

TEST(StepTest, CriteriaAgreeWhenOneCandidateDominates) {
  MatrixXd F_o = MatrixXd::Constant(2, 3, 0.5);
  F_o(1, 2) = 1e-6;
  const GreedyState s = InitState(Region(F_o), 1.0);
  for (GreedyCriterion crit :
       {GreedyCriterion::kMaxEig, GreedyCriterion::kTrace, GreedyCriterion::kLogDet}) {
    GreedyConfig cfg;
    cfg.criterion = crit;
    const std::optional<GreedyChoice> c = Step(s, cfg);
    ASSERT_TRUE(c.has_value());
    EXPECT_EQ(c->i, 1);
    EXPECT_EQ(c->j, 2);
  }
}

TEST(RunGreedyTest, TinyRegionReturnsCenter) {
  const MatrixXd F_o = MatrixXd::Constant(2, 2, 1.0);
  GreedyConfig cfg;
  cfg.theta = 1e-9;
  const GreedyResult r = RunGreedy(Region(F_o, 1e-6), cfg);
  EXPECT_EQ(r.gain.F, F_o);
  EXPECT_TRUE(r.steps.empty());
}

TEST(RunGreedyTest, SingularRadiusIsDegenerate) {
  EllipsoidRegion r = Region(MatrixXd::Constant(2, 2, 1.0));
  r.R.setZero();
  const GreedyResult res = RunGreedy(r, {});
  EXPECT_TRUE(res.degenerate);
  EXPECT_EQ(res.gain.F, r.F_o);
}

TEST(RunGreedyTest, BudgetLimitsEliminations) {
  GreedyConfig cfg;
  cfg.theta = 1.0;
  cfg.sparsity_budget = 2;
  const GreedyResult r = RunGreedy(Region(MatrixXd::Constant(2, 3, 0.1)), cfg);
  EXPECT_EQ(r.steps.size(), 2u);
  EXPECT_EQ(r.gain.Nonzeros(), 4);
}

TEST_F(SynthesizedGreedyTest, TrajectoryInvariants) {
  for (GreedyCriterion crit :
       {GreedyCriterion::kMaxEig, GreedyCriterion::kTrace, GreedyCriterion::kLogDet}) {
    GreedyConfig cfg;
    cfg.theta = 1.0;
    cfg.criterion = crit;
    cfg.recompute_period = 3;
    const GreedyResult r = RunGreedy(*region_, cfg, sys_);
    ASSERT_FALSE(r.steps.empty());
    EXPECT_GE(r.refreshes, static_cast<int>(r.steps.size()) / 3);

    // Replay: sparsity drops by one per step and every iterate is a member.
    MatrixXd F = region_->F_o;
    int nnz = FeedbackGain{F}.Nonzeros();
    for (const GreedyStepRecord& st : r.steps) {
      ASSERT_NE(F(st.i, st.j), 0.0);
      F(st.i, st.j) = 0.0;
      --nnz;
      EXPECT_EQ(st.nnz, nnz);
      EXPECT_EQ(FeedbackGain{F}.Nonzeros(), nnz);
      EXPECT_TRUE(Membership(*region_, FeedbackGain{F}, cfg.theta, 1e-8));
      const MatrixXd E = SchurConstraint(*region_, FeedbackGain{F}, cfg.theta);
      EXPECT_NEAR(st.lambda_min_E, test::DenseLambdaMin(E), 1e-6 * test::DenseLambdaMax(E));
    }
    EXPECT_EQ(F, r.gain.F);
    ASSERT_TRUE(r.hinf.has_value());
    EXPECT_LE(r.hinf->value, region_->gamma * (1 + 1e-6));
  }
}

TEST_F(SynthesizedGreedyTest, MaintainedInverseStaysAccurate) {
  GreedyConfig cfg;
  cfg.theta = 1.0;
  GreedyState s = InitState(*region_, cfg.theta);
  const int m = region_->m();
  int steps = 0;
  while (const std::optional<GreedyChoice> c = Step(s, cfg)) {
    s.Einv =
        ApplyUpdate(s.Einv, RankTwoUpdate::Eliminate(m, region_->n(), c->i, c->j, s.F(c->i, c->j)));
    s.F(c->i, c->j) = 0.0;
    s.E = SchurConstraint(*region_, FeedbackGain{s.F}, cfg.theta);
    std::erase(s.support, std::make_pair(c->i, c->j));
    EXPECT_LE((s.Einv * s.E - MatrixXd::Identity(s.E.rows(), s.E.cols())).norm(), 1e-6);
    ++steps;
  }
  EXPECT_GT(steps, 0);
  EXPECT_LE((linalg::PdInverse(s.E) * s.E - MatrixXd::Identity(s.E.rows(), s.E.cols())).norm(),
            1e-10);
}

TEST_F(SynthesizedGreedyTest, Deterministic) {
  GreedyConfig cfg;
  cfg.theta = 0.7;
  const GreedyResult a = RunGreedy(*region_, cfg);
  const GreedyResult b = RunGreedy(*region_, cfg);
  EXPECT_EQ(a.gain.F, b.gain.F);
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t k = 0; k < a.steps.size(); ++k) EXPECT_EQ(a.steps[k].score, b.steps[k].score);
}

}  // namespace
}  // namespace hinfsparse
