#include "hinfsparse/sparsify_greedy.h"

#include <spdlog/spdlog.h>

#include <cmath>

#include "hinfsparse/errors.h"
#include "hinfsparse/linalg.h"

namespace hinfsparse {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

// VᵀEinvV from three entries of Einv.
Eigen::Matrix2d Capacitance(const MatrixXd& Einv, int p, int q) {
  const double a = Einv(p, p), b = 0.5 * (Einv(p, q) + Einv(q, p)), c = Einv(q, q);
  Eigen::Matrix2d K;
  K << 0.5 * (a + 2.0 * b + c), 0.5 * (a - c), 0.5 * (a - c), 0.5 * (a - 2.0 * b + c);
  return K;
}

// Smaller eigenvalue of a 2×2 matrix known to have a real spectrum.
double MinEig2(const Eigen::Matrix2d& M) {
  const double half_tr = 0.5 * (M(0, 0) + M(1, 1));
  const double half_diff = 0.5 * (M(0, 0) - M(1, 1));
  const double disc = std::max(0.0, half_diff * half_diff + M(0, 1) * M(1, 0));
  return half_tr - std::sqrt(disc);
}

double LogDetPd(const MatrixXd& M) {
  const Eigen::LLT<MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw NumericalError("matrix is not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

PowerOptions PowerOpts(const GreedyConfig& cfg) {
  PowerOptions o;
  o.tol = cfg.power_tol;
  o.max_iters = cfg.power_max_iters;
  return o;
}

void Count(PowerStats* stats, const PowerResult& r) {
  if (stats == nullptr) return;
  ++stats->calls;
  stats->restarts += r.restarted ? 1 : 0;
  stats->fallbacks += r.fell_back ? 1 : 0;
}

// true if (score, |f|, order) of a beats b; order is the row-major position.
bool Better(double score_a, double fa, double score_b, double fb) {
  const double tol = 1e-12 * std::max(std::abs(score_a), std::abs(score_b));
  if (std::abs(score_a - score_b) > tol) return score_a < score_b;
  return fa < fb;  // equal magnitude keeps the earlier (row-major) candidate
}

}  // namespace

void GreedyConfig::Validate() const {
  if (!(theta > 0.0)) throw Error("greedy theta must be > 0");
  if (!(power_tol > 0.0)) throw Error("power_tol must be > 0");
  if (power_max_iters < 1) throw Error("power_max_iters must be >= 1");
  if (sparsity_budget && *sparsity_budget < 0) throw Error("sparsity_budget must be >= 0");
  if (recompute_period < 1) throw Error("recompute_period must be >= 1");
  if (!(pd_margin >= 0.0)) throw Error("pd_margin must be >= 0");
  if (!(drift_tol > 0.0)) throw Error("drift_tol must be > 0");
}

RankTwoUpdate RankTwoUpdate::Eliminate(int m, int n, int i, int j, double f_ij) {
  if (i < 0 || i >= m || j < 0 || j >= n) throw DimensionError("entry index out of range");
  RankTwoUpdate u;
  u.i = i;
  u.j = j;
  u.v1 = VectorXd::Zero(m + n);
  u.v2 = VectorXd::Zero(m + n);
  u.v1(i) = kInvSqrt2;
  u.v1(m + j) = kInvSqrt2;
  u.v2(i) = kInvSqrt2;
  u.v2(m + j) = -kInvSqrt2;
  u.H << -f_ij, 0.0, 0.0, f_ij;
  return u;
}

MatrixXd RankTwoUpdate::V() const {
  MatrixXd V(v1.size(), 2);
  V << v1, v2;
  return V;
}

MatrixXd EliminationPerturbation(int m, int n, int i, int j, double f_ij) {
  MatrixXd P = MatrixXd::Zero(m + n, m + n);
  P(i, m + j) = -f_ij;
  P(m + j, i) = -f_ij;
  return P;
}

GreedyState InitState(const EllipsoidRegion& region, double theta) {
  if (!(theta > 0.0)) throw DegenerateRegion("theta = 0 leaves no room to eliminate entries");
  const int m = region.m(), n = region.n();
  const MatrixXd thetaR = theta * region.R;
  const Eigen::LLT<MatrixXd> llt(thetaR);
  if (llt.info() != Eigen::Success ||
      linalg::LambdaMin(region.R) <= 1e-14 * std::max(1.0, region.R.norm())) {
    throw DegenerateRegion("region radius R is singular");
  }
  GreedyState s;
  s.theta = theta;
  s.F = region.F_o;
  s.E = SchurConstraint(region, FeedbackGain{region.F_o}, theta);
  s.Einv = MatrixXd::Zero(m + n, m + n);
  s.Einv.topLeftCorner(m, m) = linalg::Symmetrize(llt.solve(MatrixXd::Identity(m, m)));
  s.Einv.bottomRightCorner(n, n) = region.Z;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      if (s.F(i, j) != 0.0) s.support.emplace_back(i, j);
    }
  }
  s.top_vector = PowerMaxEig(s.Einv).vector;
  return s;
}

MatrixXd ApplyUpdate(const MatrixXd& Einv, const RankTwoUpdate& upd) {
  const double f = upd.H(1, 1);
  if (f == 0.0 || upd.H(0, 0) != -f) throw SingularUpdate("H is singular");
  const MatrixXd V = upd.V();
  const MatrixXd U = Einv * V;
  Eigen::Matrix2d C = Eigen::Matrix2d::Zero();
  C(0, 0) = -1.0 / f;
  C(1, 1) = 1.0 / f;
  C += V.transpose() * U;
  const double det = C.determinant();
  if (!(std::abs(det) > 1e-14 * C.cwiseAbs().maxCoeff() * C.cwiseAbs().maxCoeff())) {
    throw SingularUpdate("capacitance matrix is singular");
  }
  return linalg::Symmetrize(Einv - U * C.inverse() * U.transpose());
}

bool CandidateIsPd(const MatrixXd& Einv, const RankTwoUpdate& upd, double margin) {
  const MatrixXd V = upd.V();
  const Eigen::Matrix2d K = V.transpose() * Einv * V;
  const Eigen::Matrix2d M = Eigen::Matrix2d::Identity() + upd.H * K;
  return MinEig2(M) > margin;
}

double Score(const MatrixXd& Einv, GreedyCriterion criterion, const GreedyConfig& cfg) {
  switch (criterion) {
    case GreedyCriterion::kMaxEig:
      return PowerMaxEig(Einv, PowerOpts(cfg)).value;
    case GreedyCriterion::kTrace:
      return Einv.trace();
    case GreedyCriterion::kLogDet:
      return LogDetPd(linalg::Symmetrize(Einv));
  }
  return 0.0;
}

std::optional<GreedyChoice> Step(const GreedyState& state, const GreedyConfig& cfg,
                                 PowerStats* stats) {
  const int N = static_cast<int>(state.Einv.rows());
  const int n = static_cast<int>(state.F.cols());
  const int m = N - n;
  const MatrixXd& Einv = state.Einv;
  const PowerOptions popts = PowerOpts(cfg);

  double base = 0.0;
  if (cfg.criterion == GreedyCriterion::kTrace) base = Einv.trace();
  if (cfg.criterion == GreedyCriterion::kLogDet) base = LogDetPd(Einv);

  std::optional<GreedyChoice> best;
  double best_mag = 0.0;
  MatrixXd U(N, 2);
  for (const auto& [i, j] : state.support) {
    const double f = state.F(i, j);
    const int q = m + j;
    const Eigen::Matrix2d K = Capacitance(Einv, i, q);
    Eigen::Matrix2d H;
    H << -f, 0.0, 0.0, f;
    const Eigen::Matrix2d IHK = Eigen::Matrix2d::Identity() + H * K;
    if (!(MinEig2(IHK) > cfg.pd_margin)) continue;

    Eigen::Matrix2d C = K;
    C(0, 0) -= 1.0 / f;
    C(1, 1) += 1.0 / f;
    const Eigen::Matrix2d Cinv = C.inverse();
    if (!Cinv.allFinite()) continue;

    double score = 0.0;
    switch (cfg.criterion) {
      case GreedyCriterion::kMaxEig: {
        U.col(0) = kInvSqrt2 * (Einv.col(i) + Einv.col(q));
        U.col(1) = kInvSqrt2 * (Einv.col(i) - Einv.col(q));
        const MatrixXd W = U * Cinv;
        const auto op = [&Einv, &U, &W](const VectorXd& x, VectorXd& y) {
          y.noalias() = Einv * x;
          y.noalias() -= W * (U.transpose() * x);
        };
        const PowerResult r = PowerMaxEig(op, N, popts, state.top_vector);
        Count(stats, r);
        score = r.value;
        break;
      }
      case GreedyCriterion::kTrace: {
        U.col(0) = kInvSqrt2 * (Einv.col(i) + Einv.col(q));
        U.col(1) = kInvSqrt2 * (Einv.col(i) - Einv.col(q));
        score = base - (Cinv * (U.transpose() * U)).trace();
        break;
      }
      case GreedyCriterion::kLogDet:
        score = base - std::log(IHK.determinant());
        break;
    }
    if (!std::isfinite(score)) continue;
    if (!best || Better(score, std::abs(f), best->score, best_mag)) {
      best = GreedyChoice{i, j, score};
      best_mag = std::abs(f);
    }
  }
  return best;
}

GreedyResult RunGreedy(const EllipsoidRegion& region, const GreedyConfig& cfg,
                       const StateSpaceSystem* sys) {
  cfg.Validate();
  GreedyResult out;
  GreedyState state;
  try {
    state = InitState(region, cfg.theta);
  } catch (const DegenerateRegion& e) {
    spdlog::info("greedy sparsification skipped: {}", e.what());
    out.degenerate = true;
    out.gain = FeedbackGain{region.F_o};
    if (sys != nullptr) out.hinf = VerifyAttenuation(*sys, out.gain, region.gamma);
    return out;
  }
  const int m = region.m(), n = region.n();
  const PowerOptions popts = PowerOpts(cfg);
  const int budget = cfg.sparsity_budget.value_or(m * n);

  while (state.k < budget) {
    const std::optional<GreedyChoice> choice = Step(state, cfg, &out.power);
    if (!choice) break;
    const int i = choice->i, j = choice->j;
    const RankTwoUpdate upd = RankTwoUpdate::Eliminate(m, n, i, j, state.F(i, j));
    state.Einv = ApplyUpdate(state.Einv, upd);
    state.F(i, j) = 0.0;
    state.E(i, m + j) = state.E(m + j, i) = -region.F_o(i, j);
    std::erase(state.support, std::make_pair(i, j));
    ++state.k;

    const MatrixXd I = MatrixXd::Identity(m + n, m + n);
    if (state.k % cfg.recompute_period == 0 || (state.Einv * state.E - I).norm() > cfg.drift_tol) {
      state.Einv = linalg::PdInverse(state.E);
      ++out.refreshes;
    }
    const PowerResult top = PowerMaxEig(state.Einv, popts, state.top_vector);
    Count(&out.power, top);
    state.top_vector = top.vector;

    if (!Membership(region, FeedbackGain{state.F}, cfg.theta, cfg.membership_tol)) {
      throw NumericalError("greedy iterate left the region");
    }
    GreedyStepRecord rec;
    rec.i = i;
    rec.j = j;
    rec.score = choice->score;
    rec.lambda_min_E = 1.0 / top.value;
    rec.nnz = static_cast<int>(state.support.size());
    out.steps.push_back(rec);
    spdlog::debug("greedy step {}: ({}, {}) score={} nnz={}", state.k, i, j, rec.score, rec.nnz);
  }
  out.gain = FeedbackGain{state.F};
  if (sys != nullptr) out.hinf = VerifyAttenuation(*sys, out.gain, region.gamma);
  return out;
}

}  // namespace hinfsparse
