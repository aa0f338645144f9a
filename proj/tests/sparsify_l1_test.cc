#include "hinfsparse/sparsify_l1.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hinfsparse/errors.h"
#include "hinfsparse/linalg.h"
#include "test_util.h"

namespace hinfsparse {
namespace {

using Eigen::MatrixXd;

EllipsoidRegion ScalarRegion(double f_o, double z, double r) {
  return EllipsoidRegion::FromParts(MatrixXd::Constant(1, 1, f_o), MatrixXd::Constant(1, 1, z),
                                    MatrixXd::Constant(1, 1, r), 1.0);
}

class SynthesizedL1Test : public ::testing::Test {
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
StateSpaceSystem* SynthesizedL1Test::sys_ = nullptr;
EllipsoidRegion* SynthesizedL1Test::region_ = nullptr;

TEST(ReweightConfigTest, Validation) {
  ReweightConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.zeta = 0.0;
  EXPECT_THROW(c.Validate(), Error);
  c = {};
  c.eps_d = -1.0;
  EXPECT_THROW(c.Validate(), Error);
  c = {};
  c.truncation_threshold = -1.0;
  EXPECT_THROW(c.Validate(), Error);
}

TEST(UpdateWeightsTest, Formula) {
  const MatrixXd F = (MatrixXd(1, 3) << 0.0, 1.0, -2.0).finished();
  const MatrixXd W = UpdateWeights(FeedbackGain{F}, 1e-3);
  EXPECT_DOUBLE_EQ(W(0, 0), 1000.0);
  EXPECT_DOUBLE_EQ(W(0, 1), 1.0 / 1.001);
  EXPECT_DOUBLE_EQ(W(0, 2), 1.0 / 2.001);
  const MatrixXd Wz = UpdateWeights(FeedbackGain{MatrixXd::Zero(2, 2)}, 0.5);
  EXPECT_EQ(Wz, MatrixXd::Constant(2, 2, 2.0));
  EXPECT_THROW(UpdateWeights(FeedbackGain{F}, 0.0), Error);
}

TEST(StoppingRatioTest, Examples) {
  std::mt19937_64 rng(1);
  const FeedbackGain A{test::RandomMatrix(3, 4, rng)};
  const FeedbackGain Z{MatrixXd::Zero(3, 4)};
  EXPECT_EQ(StoppingRatio(A, A), 0.0);
  EXPECT_NEAR(StoppingRatio(A, Z), 1.0, 1e-15);
  EXPECT_EQ(StoppingRatio(Z, Z), 0.0);
  EXPECT_TRUE(std::isinf(StoppingRatio(Z, A)));
}

TEST(StoppingRatioTest, MatchesSingularValueOracle) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 20; ++k) {
    const MatrixXd a = test::RandomMatrix(3, 5, rng), b = test::RandomMatrix(3, 5, rng);
    const double expected = Eigen::JacobiSVD<MatrixXd>(a - b).singularValues()(0) /
                            Eigen::JacobiSVD<MatrixXd>(a).singularValues()(0);
    EXPECT_NEAR(StoppingRatio(FeedbackGain{a}, FeedbackGain{b}), expected, 1e-12 * expected);
    EXPECT_NEAR(StoppingRatio(FeedbackGain{a}, FeedbackGain{b}, StoppingNorm::kFrobenius),
                (a - b).norm() / a.norm(), 1e-12);
  }
}

TEST(TruncateTest, ZeroThresholdLeavesGainUnchanged) {
  std::mt19937_64 rng(3);
  const EllipsoidRegion r = ScalarRegion(0.0, 1.0, 1.0);
  const FeedbackGain F{MatrixXd::Constant(1, 1, 1e-9)};
  EXPECT_EQ(Truncate(F, 0.0, r, 1.0).F, F.F);
}

TEST(TruncateTest, ZeroesTinyEntryWithAmpleSlack) {
  const EllipsoidRegion r = EllipsoidRegion::FromParts(
      MatrixXd::Zero(1, 2), MatrixXd::Identity(2, 2), MatrixXd::Identity(1, 1), 1.0);
  const FeedbackGain F{(MatrixXd(1, 2) << 1e-6, 0.3).finished()};
  int restored = -1;
  const FeedbackGain T = Truncate(F, 5e-5, r, 1.0, 1e-8, &restored);
  EXPECT_EQ(T.F(0, 0), 0.0);
  EXPECT_EQ(T.F(0, 1), 0.3);
  EXPECT_EQ(restored, 0);
}

TEST(TruncateTest, RestoresEntryWhenZeroingLeavesRegion) {
  // Region |F − 1e-4| ≤ 6e-5: F = 4e-5 sits on the boundary, 0 lies outside.
  const EllipsoidRegion r = ScalarRegion(1e-4, 1.0, 6e-5 * 6e-5);
  const FeedbackGain F{MatrixXd::Constant(1, 1, 4e-5)};
  int restored = 0;
  const FeedbackGain T = Truncate(F, 5e-5, r, 1.0, 1e-12, &restored);
  EXPECT_EQ(T.F(0, 0), 4e-5);
  EXPECT_EQ(restored, 1);
}

TEST(WeightedL1StepTest, ThetaZeroReturnsCenter) {
  std::mt19937_64 rng(4);
  const EllipsoidRegion r = EllipsoidRegion::FromParts(
      test::RandomMatrix(2, 3, rng), test::RandomSpd(3, rng), test::RandomSpd(2, rng), 1.0);
  EXPECT_EQ(WeightedL1Step(r, 0.0, MatrixXd::Ones(2, 3)).F, r.F_o);
}

TEST(WeightedL1StepTest, ScalarClosedForm) {
  // min |F| s.t. (F − F_o)² Z ≤ R: 0 if F_o² ≤ R/Z, else F_o shrunk by √(R/Z).
  for (const auto& [f_o, z, r] :
       {std::tuple{0.5, 1.0, 1.0}, {2.0, 1.0, 1.0}, {-3.0, 4.0, 1.0}, {0.2, 2.0, 0.1}}) {
    const double radius = std::sqrt(r / z);
    const double expected = std::abs(f_o) <= radius ? 0.0 : f_o - std::copysign(radius, f_o);
    const FeedbackGain F = WeightedL1Step(ScalarRegion(f_o, z, r), 1.0, MatrixXd::Ones(1, 1));
    EXPECT_NEAR(F.F(0, 0), expected, 1e-6 * (1 + std::abs(f_o)));
  }
}

TEST_F(SynthesizedL1Test, ScalingWeightsLeavesMinimizerUnchanged) {
  std::mt19937_64 rng(5);
  const MatrixXd W = UpdateWeights(FeedbackGain{region_->F_o}, 1e-3);
  EXPECT_EQ(WeightedL1Step(*region_, 0.5, W).F, WeightedL1Step(*region_, 0.5, 2.0 * W).F);
}

TEST_F(SynthesizedL1Test, ObjectiveBoundsAndThetaMonotonicity) {
  const MatrixXd W = MatrixXd::Ones(region_->m(), region_->n());
  const double at_center = (W.array() * region_->F_o.array().abs()).sum();
  double previous = at_center;
  for (double theta : {0.1, 0.4, 0.7, 1.0}) {
    double objective = 0.0;
    const FeedbackGain F = WeightedL1Step(*region_, theta, W, *sdp::DefaultBackend(), &objective);
    EXPECT_TRUE(Membership(*region_, F, theta, 1e-8));
    EXPECT_NEAR(objective, (W.array() * F.F.array().abs()).sum(), 1e-9 * (1 + objective));
    EXPECT_LE(objective, at_center * (1 + 1e-9));
    EXPECT_LE(objective, previous * (1 + 1e-6));
    previous = objective;
  }
}

TEST_F(SynthesizedL1Test, ThetaZeroStopsAfterOneIteration) {
  ReweightConfig cfg;
  cfg.theta = 0.0;
  const ReweightResult r = ReweightedL1(*region_, cfg);
  EXPECT_EQ(r.gain.F, region_->F_o);
  ASSERT_EQ(r.history.iterations.size(), 1u);
  EXPECT_EQ(r.history.iterations[0].eps, 0.0);
  EXPECT_TRUE(r.history.converged);
}

TEST_F(SynthesizedL1Test, FullRunKeepsGuarantee) {
  ReweightConfig cfg;
  cfg.theta = 1.0;
  const ReweightResult r = ReweightedL1(*region_, cfg, *sdp::DefaultBackend(), sys_);
  ASSERT_FALSE(r.history.iterations.empty());
  EXPECT_LE(r.history.iterations.size(), 20u);
  for (const ReweightRecord& rec : r.history.iterations) {
    EXPECT_TRUE(Membership(*region_, FeedbackGain{rec.F}, cfg.theta, 1e-8));
    EXPECT_TRUE((rec.W.array() > 0.0).all());
    EXPECT_TRUE((rec.W.array() <= 1.0 / cfg.zeta + 1e-12).all());
  }
  // Weights freeze after the leading reweighting iterations.
  const auto& its = r.history.iterations;
  for (std::size_t k = cfg.reweight_iters + 1; k < its.size(); ++k) {
    EXPECT_EQ(its[k].W, its[cfg.reweight_iters].W);
  }
  if (r.history.converged) EXPECT_LE(its.back().eps, cfg.eps_d);
  EXPECT_TRUE(Membership(*region_, r.gain, cfg.theta, 1e-8));
  ASSERT_TRUE(r.hinf.has_value());
  EXPECT_LE(r.hinf->value, region_->gamma * (1 + 1e-6));
  EXPECT_LE(HinfNorm(CloseLoop(*sys_, r.gain)).value, region_->gamma * (1 + 1e-6));
  EXPECT_LT(r.gain.Nonzeros(), FeedbackGain{region_->F_o}.Nonzeros());
}

TEST_F(SynthesizedL1Test, Deterministic) {
  ReweightConfig cfg;
  cfg.theta = 0.6;
  EXPECT_EQ(ReweightedL1(*region_, cfg).gain.F, ReweightedL1(*region_, cfg).gain.F);
}

}  // namespace
}  // namespace hinfsparse
