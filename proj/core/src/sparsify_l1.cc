#include "hinfsparse/sparsify_l1.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hinfsparse/errors.h"
#include "hinfsparse/linalg.h"

namespace hinfsparse {
namespace {

using Eigen::MatrixXd;

// The solve targets a region shrunk by this relative amount so that the
// returned gain is strictly inside the requested one despite solver
// tolerances.
constexpr double kBoundaryBackoff = 1e-6;

// Moves F toward F_o until membership holds.
FeedbackGain PullInside(const EllipsoidRegion& region, const FeedbackGain& F, double theta,
                        double tol) {
  if (Membership(region, F, theta, tol)) return F;
  double lo = 0.0, hi = 1.0;
  for (int k = 0; k < 60; ++k) {
    const double mid = 0.5 * (lo + hi);
    const FeedbackGain G{region.F_o + mid * (F.F - region.F_o)};
    (Membership(region, G, theta, tol) ? lo : hi) = mid;
  }
  return FeedbackGain{region.F_o + lo * (F.F - region.F_o)};
}

}  // namespace

void ReweightConfig::Validate() const {
  if (!(theta >= 0.0)) throw Error("theta must be >= 0");
  if (!(zeta > 0.0)) throw Error("zeta must be > 0");
  if (!(eps_d > 0.0)) throw Error("eps_d must be > 0");
  if (max_iters < 1) throw Error("max_iters must be >= 1");
  if (reweight_iters < 0) throw Error("reweight_iters must be >= 0");
  if (!(truncation_threshold >= 0.0)) throw Error("truncation_threshold must be >= 0");
  if (!(membership_tol >= 0.0)) throw Error("membership_tol must be >= 0");
}

FeedbackGain WeightedL1Step(const EllipsoidRegion& region, double theta, const MatrixXd& W,
                            const sdp::SdpBackend& backend, double* objective) {
  const int m = region.m(), n = region.n();
  if (W.rows() != m || W.cols() != n) throw DimensionError("weights must have the gain's shape");
  if (!(W.minCoeff() > 0.0) || !linalg::AllFinite(W)) {
    throw Error("weights must be positive and finite");
  }
  Membership(region, FeedbackGain{region.F_o}, theta);  // validates theta
  if (theta == 0.0) {
    if (objective != nullptr) *objective = (W.array() * region.F_o.array().abs()).sum();
    return FeedbackGain{region.F_o};
  }

  const double theta_s = theta * (1.0 - kBoundaryBackoff);
  const MatrixXd Wn = W / W.maxCoeff();

  // Congruence making the PSD block the identity at F = F_o, which keeps the
  // interior-point iterates well scaled when R or Z is ill-conditioned.
  // Falls back to a diagonal scaling when R is singular.
  MatrixXd T = MatrixXd::Zero(m + n, m + n);
  if (linalg::LambdaMin(region.R) > 1e-12 * std::max(1.0, linalg::LambdaMax(region.R))) {
    T.topLeftCorner(m, m) = linalg::PdInvSqrt(theta_s * region.R);
  } else {
    T.topLeftCorner(m, m) =
        (theta_s * region.R.diagonal()).cwiseMax(1e-300).cwiseSqrt().cwiseInverse().asDiagonal();
  }
  T.bottomRightCorner(n, n) = linalg::PdInvSqrt(region.Zinv);

  sdp::SdpProblem prob;
  const int Fb = prob.AddMatrix("F", m, n);
  const int Tb = prob.AddMatrix("T", m, n);
  prob.AddNonnegative("abs", 2 * m * n, [Fb, Tb, m, n](const sdp::Assignment& a) {
    const MatrixXd F = a[Fb], T = a[Tb];
    Eigen::VectorXd v(2 * m * n);
    for (int i = 0, k = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j, k += 2) {
        v(k) = T(i, j) - F(i, j);
        v(k + 1) = T(i, j) + F(i, j);
      }
    }
    return v;
  });
  const MatrixXd base = SchurConstraint(region, FeedbackGain{region.F_o}, theta_s);
  prob.AddPsdConstraint("ellipsoid", m + n, [&, Fb](const sdp::Assignment& a) -> MatrixXd {
    MatrixXd E = base;
    const MatrixXd D = a[Fb] - region.F_o;
    E.topRightCorner(m, n) = D;
    E.bottomLeftCorner(n, m) = D.transpose();
    const MatrixXd S = T * E * T;
    return 0.5 * (S + S.transpose());
  });
  prob.SetObjective(Tb, Wn);

  const sdp::SolveResult res = backend.Solve(prob);
  if (res.status == sdp::SolveStatus::kInfeasible || !res.y.allFinite()) {
    throw NumericalError(std::string("weighted l1 step failed: ") + sdp::ToString(res.status));
  }
  if (!sdp::IsUsable(res)) {
    spdlog::warn("weighted l1 step stopped early ({}); using best iterate",
                 sdp::ToString(res.status));
  }
  const FeedbackGain F = PullInside(region, FeedbackGain{prob.Value(Fb, res.y)}, theta, 0.0);
  if (objective != nullptr) *objective = (W.array() * F.F.array().abs()).sum();
  return F;
}

MatrixXd UpdateWeights(const FeedbackGain& F, double zeta) {
  if (!(zeta > 0.0)) throw Error("zeta must be > 0");
  return (F.F.array().abs() + zeta).inverse().matrix();
}

double StoppingRatio(const FeedbackGain& F_next, const FeedbackGain& F_prev, StoppingNorm norm) {
  if (F_next.rows() != F_prev.rows() || F_next.cols() != F_prev.cols()) {
    throw DimensionError("gains have different shapes");
  }
  const auto measure = [norm](const MatrixXd& M) {
    return norm == StoppingNorm::kSpectral ? linalg::SpectralNorm(M) : M.norm();
  };
  const double num = measure(F_next.F - F_prev.F);
  const double den = measure(F_next.F);
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

FeedbackGain Truncate(const FeedbackGain& F, double threshold, const EllipsoidRegion& region,
                      double theta, double tol, int* restored) {
  if (!(threshold >= 0.0)) throw Error("threshold must be >= 0");
  if (restored != nullptr) *restored = 0;
  FeedbackGain out = F;
  std::vector<std::pair<int, int>> cut;
  for (int i = 0; i < F.rows(); ++i) {
    for (int j = 0; j < F.cols(); ++j) {
      if (F.F(i, j) != 0.0 && std::abs(F.F(i, j)) < threshold) {
        out.F(i, j) = 0.0;
        cut.emplace_back(i, j);
      }
    }
  }
  if (cut.empty() || Membership(region, out, theta, tol)) return out;
  std::stable_sort(cut.begin(), cut.end(), [&F](const auto& a, const auto& b) {
    return std::abs(F.F(a.first, a.second)) > std::abs(F.F(b.first, b.second));
  });
  for (const auto& [i, j] : cut) {
    out.F(i, j) = F.F(i, j);
    if (restored != nullptr) ++*restored;
    if (Membership(region, out, theta, tol)) break;
  }
  return out;
}

ReweightResult ReweightedL1(const EllipsoidRegion& region, const ReweightConfig& config,
                            const sdp::SdpBackend& backend, const StateSpaceSystem* sys) {
  config.Validate();
  const int m = region.m(), n = region.n();
  ReweightResult out;
  ReweightHistory& hist = out.history;

  MatrixXd W = MatrixXd::Ones(m, n);
  FeedbackGain prev{region.F_o};
  FeedbackGain F = prev;
  for (int k = 0; k < config.max_iters; ++k) {
    ReweightRecord rec;
    rec.W = W;
    F = WeightedL1Step(region, config.theta, W, backend, &rec.objective);
    rec.F = F.F;
    rec.eps = StoppingRatio(F, prev, config.norm);
    rec.nnz = linalg::CountAbove(F.F, config.truncation_threshold);
    spdlog::debug("l1 iteration {}: eps={} nnz={} objective={}", k + 1, rec.eps, rec.nnz,
                  rec.objective);
    hist.iterations.push_back(std::move(rec));
    if (hist.iterations.back().eps <= config.eps_d) {
      hist.converged = true;
      break;
    }
    if (k < config.reweight_iters) W = UpdateWeights(F, config.zeta);
    prev = F;
  }

  const int before = linalg::CountNonzeros(F.F);
  out.gain = Truncate(F, config.truncation_threshold, region, config.theta, config.membership_tol,
                      &hist.restored);
  hist.truncated = before - linalg::CountNonzeros(out.gain.F);
  if (!Membership(region, out.gain, config.theta, config.membership_tol)) {
    throw NumericalError("sparse gain left the region");
  }
  if (sys != nullptr) out.hinf = VerifyAttenuation(*sys, out.gain, region.gamma);
  return out;
}

}  // namespace hinfsparse
