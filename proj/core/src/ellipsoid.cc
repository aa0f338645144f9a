#include "hinfsparse/ellipsoid.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "hinfsparse/errors.h"
#include "hinfsparse/linalg.h"

namespace hinfsparse {
namespace {

using Eigen::MatrixXd;

void CheckGamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw Error("gamma must be positive and finite");
  }
}

void CheckTheta(const EllipsoidRegion& region, double theta) {
  if (!(theta >= 0.0) || !std::isfinite(theta)) throw Error("theta must be >= 0");
  if (theta > 1.0 && !region.allow_theta_above_one) {
    throw Error("theta > 1 requires allow_theta_above_one");
  }
}

void CheckGainShape(const EllipsoidRegion& region, const FeedbackGain& F) {
  if (F.rows() != region.m() || F.cols() != region.n()) {
    throw DimensionError("gain is " + std::to_string(F.rows()) + "x" + std::to_string(F.cols()) +
                         ", region expects " + std::to_string(region.m()) + "x" +
                         std::to_string(region.n()));
  }
}

// Variable blocks shared by both problem forms.
SynthesisLmis DeclareVariables(const StateSpaceSystem& sys) {
  SynthesisLmis t;
  t.P = t.problem.AddSymmetric("P", sys.n());
  t.Xhat = t.problem.AddSymmetric("Xhat", sys.m());
  t.Yhat = t.problem.AddMatrix("Yhat", sys.m(), sys.n());
  t.Zhat = t.problem.AddSymmetric("Zhat", sys.n());
  return t;
}

sdp::SdpProblem::MatrixMap LmiMap(const StateSpaceSystem& sys, double gamma,
                                  const SynthesisLmis& t) {
  return [&sys, gamma, P = t.P, X = t.Xhat, Y = t.Yhat,
          Z = t.Zhat](const sdp::Assignment& a) -> MatrixXd {
    return -SynthesisLmiMatrix(sys, gamma, a[P], a[X], a[Y], a[Z]);
  };
}

}  // namespace

void SynthesisOptions::Validate() const {
  if (strictness_eps && !(*strictness_eps > 0.0)) throw Error("strictness_eps must be > 0");
  if (condition_cap && !(*condition_cap >= 1.0)) throw Error("condition_cap must be >= 1");
  if (condition_cap && !(condition_cap_limit >= *condition_cap)) {
    throw Error("condition_cap_limit must be >= condition_cap");
  }
  if (!(solver_tol > 0.0)) throw Error("solver_tol must be > 0");
  if (!(margin_cap > 0.0)) throw Error("margin_cap must be > 0");
  if (!(verify_rel_tol >= 0.0)) throw Error("verify_rel_tol must be >= 0");
}

double DefaultStrictness(const StateSpaceSystem& sys) {
  return 1e-6 * (1.0 + linalg::SpectralNorm(sys.A));
}

void EllipsoidRegion::Validate(double tol) const {
  const int mm = m(), nn = n();
  if (Z.rows() != nn || Z.cols() != nn || Zinv.rows() != nn || Zinv.cols() != nn ||
      R.rows() != mm || R.cols() != mm) {
    throw DimensionError("region blocks have inconsistent shapes");
  }
  if (!(gamma > 0.0)) throw Error("region gamma must be positive");
  if (!linalg::AllFinite(F_o) || !linalg::AllFinite(Z) || !linalg::AllFinite(R)) {
    throw Error("region has non-finite entries");
  }
  if (!(linalg::LambdaMin(Z) > 0.0))
    throw NumericalError("region shape Z is not positive definite");
  if (linalg::LambdaMin(R) < -tol * (1.0 + R.norm())) {
    throw NumericalError("region radius R is not positive semidefinite");
  }
  const double drift = (Zinv * Z - MatrixXd::Identity(nn, nn)).norm();
  if (drift > tol) throw NumericalError("cached Zinv does not invert Z");
}

EllipsoidRegion EllipsoidRegion::FromParts(MatrixXd F_o, MatrixXd Z, MatrixXd R, double gamma) {
  EllipsoidRegion r;
  r.F_o = std::move(F_o);
  r.Z = linalg::Symmetrize(Z);
  r.R = linalg::Symmetrize(R);
  r.Zinv = linalg::PdInverse(r.Z);
  r.gamma = gamma;
  r.Validate();
  return r;
}

MatrixXd SynthesisLmiMatrix(const StateSpaceSystem& sys, double gamma, const MatrixXd& P,
                            const MatrixXd& Xhat, const MatrixXd& Yhat, const MatrixXd& Zhat) {
  const int n = sys.n(), p = sys.p();
  const MatrixXd AP_BY = sys.A * P - sys.B * Yhat;
  const MatrixXd XBt = Xhat * sys.B.transpose();
  MatrixXd M(n + p, n + p);
  M.topLeftCorner(n, n) = AP_BY + AP_BY.transpose() - sys.B * XBt + Zhat;
  const MatrixXd Q21 = sys.C * P - sys.Dgu * XBt - sys.Dgu * Yhat;
  M.bottomLeftCorner(p, n) = Q21;
  M.topRightCorner(n, p) = Q21.transpose();
  M.bottomRightCorner(p, p) =
      -gamma * gamma * MatrixXd::Identity(p, p) - sys.Dgu * Xhat * sys.Dgu.transpose();
  MatrixXd W(n + p, sys.mv());
  W << sys.Bv, sys.Dgv;
  M.noalias() += W * W.transpose();
  return linalg::Symmetrize(M);
}

SynthesisLmis AssembleSynthesisLmis(const StateSpaceSystem& sys, double gamma,
                                    const SynthesisOptions& opts) {
  sys.Validate();
  CheckGamma(gamma);
  opts.Validate();
  const double eps = opts.strictness_eps.value_or(DefaultStrictness(sys));
  const int n = sys.n(), m = sys.m(), p = sys.p();
  SynthesisLmis t = DeclareVariables(sys);
  auto& prob = t.problem;
  const MatrixXd In = MatrixXd::Identity(n, n);

  prob.AddPsdConstraint("Xhat_nsd", m,
                        [X = t.Xhat](const sdp::Assignment& a) -> MatrixXd { return -a[X]; });
  if (opts.condition_cap) {
    const double kappa = *opts.condition_cap;
    const int mu = prob.AddScalar("mu");
    prob.AddPsdConstraint("P_lower", n, [P = t.P, mu, In](const sdp::Assignment& a) -> MatrixXd {
      return a[P] - a[mu](0, 0) * In;
    });
    prob.AddPsdConstraint("P_upper", n,
                          [P = t.P, mu, In, kappa](const sdp::Assignment& a) -> MatrixXd {
                            return kappa * a[mu](0, 0) * In - a[P];
                          });
    prob.AddNonnegative("mu_margin", 1, [mu, eps](const sdp::Assignment& a) -> Eigen::VectorXd {
      return Eigen::VectorXd::Constant(1, a[mu](0, 0) - eps);
    });
  } else {
    prob.AddPsdConstraint("P_pd", n, [P = t.P, In, eps](const sdp::Assignment& a) -> MatrixXd {
      return a[P] - eps * In;
    });
  }
  prob.AddPsdConstraint("Zhat_pd", n, [Z = t.Zhat, In, eps](const sdp::Assignment& a) -> MatrixXd {
    return a[Z] - eps * In;
  });
  const auto lmi = LmiMap(sys, gamma, t);
  const MatrixXd Inp = MatrixXd::Identity(n + p, n + p);
  prob.AddPsdConstraint("lmi", n + p, [lmi, Inp, eps](const sdp::Assignment& a) -> MatrixXd {
    return lmi(a) - eps * Inp;
  });
  return t;
}

SynthesisLmis AssembleMaxMarginLmis(const StateSpaceSystem& sys, double gamma,
                                    const SynthesisOptions& opts) {
  sys.Validate();
  CheckGamma(gamma);
  opts.Validate();
  const int n = sys.n(), m = sys.m(), p = sys.p();
  SynthesisLmis t = DeclareVariables(sys);
  auto& prob = t.problem;
  t.margin = prob.AddScalar("t");
  const int ts = t.margin;
  const MatrixXd In = MatrixXd::Identity(n, n);
  const MatrixXd Im = MatrixXd::Identity(m, m);

  // −X̂ carries the margin too: R = −X̂ is the region's radius, and without a
  // push away from zero the optimum sits at X̂ = 0.
  prob.AddPsdConstraint("Xhat_nd", m, [X = t.Xhat, ts, Im](const sdp::Assignment& a) -> MatrixXd {
    return -a[X] - a[ts](0, 0) * Im;
  });
  if (opts.condition_cap) {
    // μI ⪯ P ⪯ κμI bounds cond(P) by κ without fixing the scale of P.
    const double kappa = *opts.condition_cap;
    const int mu = prob.AddScalar("mu");
    prob.AddPsdConstraint("P_lower", n, [P = t.P, mu, In](const sdp::Assignment& a) -> MatrixXd {
      return a[P] - a[mu](0, 0) * In;
    });
    prob.AddPsdConstraint("P_upper", n,
                          [P = t.P, mu, In, kappa](const sdp::Assignment& a) -> MatrixXd {
                            return kappa * a[mu](0, 0) * In - a[P];
                          });
    prob.AddNonnegative("mu_margin", 1, [mu, ts](const sdp::Assignment& a) -> Eigen::VectorXd {
      return Eigen::VectorXd::Constant(1, a[mu](0, 0) - a[ts](0, 0));
    });
  } else {
    prob.AddPsdConstraint("P_pd", n, [P = t.P, ts, In](const sdp::Assignment& a) -> MatrixXd {
      return a[P] - a[ts](0, 0) * In;
    });
  }
  prob.AddNonnegative("margin_cap", 1,
                      [ts, cap = opts.margin_cap](const sdp::Assignment& a) -> Eigen::VectorXd {
                        return Eigen::VectorXd::Constant(1, cap - a[ts](0, 0));
                      });
  prob.AddPsdConstraint("Zhat_pd", n, [Z = t.Zhat, ts, In](const sdp::Assignment& a) -> MatrixXd {
    return a[Z] - a[ts](0, 0) * In;
  });
  const auto lmi = LmiMap(sys, gamma, t);
  const MatrixXd Inp = MatrixXd::Identity(n + p, n + p);
  prob.AddPsdConstraint("lmi", n + p, [lmi, ts, Inp](const sdp::Assignment& a) -> MatrixXd {
    return lmi(a) - a[ts](0, 0) * Inp;
  });
  prob.SetObjective(prob.ScalarIndex(ts, 0, 0), -1.0);
  return t;
}

EllipsoidRegion DeriveEllipsoid(const SdpSolution& sol, double gamma, RadiusFormula formula) {
  CheckGamma(gamma);
  const int n = static_cast<int>(sol.P.rows());
  const int m = static_cast<int>(sol.Xhat.rows());
  if (sol.P.cols() != n || sol.Zhat.rows() != n || sol.Zhat.cols() != n || sol.Xhat.cols() != m ||
      sol.Yhat.rows() != m || sol.Yhat.cols() != n) {
    throw DimensionError("SDP solution blocks have inconsistent shapes");
  }
  const MatrixXd P = linalg::Symmetrize(sol.P);
  const MatrixXd Zhat = linalg::Symmetrize(sol.Zhat);
  const Eigen::LLT<MatrixXd> P_llt(P);
  const Eigen::LLT<MatrixXd> Zhat_llt(Zhat);
  if (P_llt.info() != Eigen::Success) throw NumericalError("P is not positive definite");
  if (Zhat_llt.info() != Eigen::Success) throw NumericalError("Zhat is not positive definite");

  const MatrixXd Pinv = P_llt.solve(MatrixXd::Identity(n, n));
  const MatrixXd Zhat_inv_P = Zhat_llt.solve(P);                      // Ẑ⁻¹ P
  const MatrixXd Zhat_inv_Yt = Zhat_llt.solve(sol.Yhat.transpose());  // Ẑ⁻¹ Ŷᵀ

  EllipsoidRegion region;
  region.gamma = gamma;
  region.F_o = -P_llt.solve(sol.Yhat.transpose()).transpose();
  region.Z = linalg::Symmetrize(P * Zhat_inv_P);
  region.Zinv = linalg::Symmetrize(Pinv * Zhat * Pinv);

  const MatrixXd X = linalg::Symmetrize(sol.Xhat + sol.Yhat * Zhat_inv_Yt);
  const MatrixXd Y = sol.Yhat * Zhat_inv_P;
  if (formula == RadiusFormula::kCompletedSquare) {
    const MatrixXd R = linalg::Symmetrize(Y * region.Zinv * Y.transpose() - X);
    // Algebraically R = −X̂; keep the cancellation-free form once the
    // literal evaluation agrees with it.
    const MatrixXd R_exact = -linalg::Symmetrize(sol.Xhat);
    const double scale = 1.0 + X.norm() + (Y * region.Zinv * Y.transpose()).norm();
    // The literal form loses about cond(P)·cond(Ẑ) ulps to cancellation.
    const double cond = (linalg::LambdaMax(P) / linalg::LambdaMin(P)) *
                        (linalg::LambdaMax(Zhat) / linalg::LambdaMin(Zhat));
    const double tol = std::max(1e-8, 100.0 * std::numeric_limits<double>::epsilon() * cond);
    if ((R - R_exact).norm() > tol * scale) {
      throw NumericalError("radius does not match -Xhat; certificates are inconsistent");
    }
    region.R = R_exact;
  } else {
    region.R = linalg::Symmetrize(Y * region.Z * Y.transpose() - X);
  }
  if (linalg::LambdaMin(region.R) < -1e-8 * (1.0 + region.R.norm())) {
    throw NumericalError("radius R is indefinite");
  }
  return region;
}

namespace {

SynthesisResult SynthesizeOnce(const StateSpaceSystem& sys, double gamma,
                               const SynthesisOptions& opts, const sdp::SdpBackend& backend) {
  const SynthesisLmis t = opts.maximize_margin ? AssembleMaxMarginLmis(sys, gamma, opts)
                                               : AssembleSynthesisLmis(sys, gamma, opts);
  const double eps = opts.strictness_eps.value_or(DefaultStrictness(sys));
  const sdp::SolveResult res = backend.Solve(t.problem);
  const std::string status = sdp::ToString(res.status);
  if (res.status == sdp::SolveStatus::kInfeasible || !res.y.allFinite()) {
    throw InfeasibleError("synthesis LMIs are infeasible at gamma=" + std::to_string(gamma), status,
                          -std::numeric_limits<double>::infinity());
  }

  SynthesisResult out;
  SdpSolution& sol = out.solution;
  sol.P = linalg::Symmetrize(t.problem.Value(t.P, res.y));
  sol.Xhat = linalg::Symmetrize(t.problem.Value(t.Xhat, res.y));
  sol.Yhat = t.problem.Value(t.Yhat, res.y);
  sol.Zhat = linalg::Symmetrize(t.problem.Value(t.Zhat, res.y));
  sol.solver_status = status;
  sol.solver_iterations = res.iterations;
  sol.condition_cap = opts.condition_cap;

  // Feasibility is judged on the returned matrices, not on solver flags.
  const double lmi_slack =
      linalg::LambdaMin(-SynthesisLmiMatrix(sys, gamma, sol.P, sol.Xhat, sol.Yhat, sol.Zhat));
  sol.margin = std::min({linalg::LambdaMin(sol.P), linalg::LambdaMin(sol.Zhat), lmi_slack});
  const double xhat_max = linalg::LambdaMax(sol.Xhat);
  bool cap_ok = true;
  if (opts.condition_cap) {
    cap_ok =
        linalg::LambdaMax(sol.P) <= *opts.condition_cap * (1.0 + 1e-6) * linalg::LambdaMin(sol.P);
  }
  if (!(sol.margin >= eps) || !(xhat_max <= 0.0) || !cap_ok) {
    throw InfeasibleError("synthesis LMIs have no solution with margin " + std::to_string(eps) +
                              " at gamma=" + std::to_string(gamma) + " (achieved " +
                              std::to_string(sol.margin) + ")",
                          status, sol.margin);
  }

  out.region = DeriveEllipsoid(sol, gamma);
  out.region.allow_theta_above_one = opts.allow_theta_above_one;

  out.center_hinf =
      VerifyAttenuation(sys, FeedbackGain{out.region.F_o}, gamma, opts.verify_rel_tol);
  spdlog::debug(
      "synthesized region: gamma={} margin={} center norm={} "
      "solver={} ({} its)",
      gamma, sol.margin, out.center_hinf.value, status, res.iterations);
  return out;
}

}  // namespace

SynthesisResult SynthesizeRegion(const StateSpaceSystem& sys, double gamma,
                                 const SynthesisOptions& opts, const sdp::SdpBackend& backend) {
  opts.Validate();
  SynthesisOptions attempt = opts;
  while (true) {
    try {
      return SynthesizeOnce(sys, gamma, attempt, backend);
    } catch (const InfeasibleError&) {
      if (!attempt.condition_cap || *attempt.condition_cap >= opts.condition_cap_limit) throw;
      attempt.condition_cap = std::min(100.0 * *attempt.condition_cap, opts.condition_cap_limit);
      spdlog::debug("synthesis infeasible at gamma={}; raising condition cap to {}", gamma,
                    *attempt.condition_cap);
    }
  }
}

double MembershipSlack(const EllipsoidRegion& region, const FeedbackGain& F, double theta) {
  CheckGainShape(region, F);
  const MatrixXd D = F.F - region.F_o;
  return linalg::LambdaMin(theta * region.R - D * region.Z * D.transpose());
}

bool Membership(const EllipsoidRegion& region, const FeedbackGain& F, double theta, double tol) {
  CheckTheta(region, theta);
  return MembershipSlack(region, F, theta) >= -tol;
}

MatrixXd SchurConstraint(const EllipsoidRegion& region, const FeedbackGain& F, double theta) {
  CheckGainShape(region, F);
  if (!(theta >= 0.0)) throw Error("theta must be >= 0");
  const int m = region.m(), n = region.n();
  MatrixXd E(m + n, m + n);
  const MatrixXd D = F.F - region.F_o;
  E.topLeftCorner(m, m) = theta * region.R;
  E.topRightCorner(m, n) = D;
  E.bottomLeftCorner(n, m) = D.transpose();
  E.bottomRightCorner(n, n) = region.Zinv;
  return E;
}

FeedbackGain SampleBoundary(const EllipsoidRegion& region, double theta, const MatrixXd& U) {
  CheckTheta(region, theta);
  if (U.rows() != region.m() || U.cols() != region.n()) {
    throw DimensionError("U must have the shape of the gain");
  }
  if (linalg::SpectralNorm(U) > 1.0 + 1e-12) throw Error("sigma_max(U) must be <= 1");
  if (theta == 0.0) return FeedbackGain{region.F_o};
  return FeedbackGain{region.F_o + std::sqrt(theta) * linalg::PsdSqrt(region.R) * U *
                                       linalg::PdInvSqrt(region.Z)};
}

HinfResult VerifyAttenuation(const StateSpaceSystem& sys, const FeedbackGain& F, double gamma,
                             double rel_tol) {
  const HinfResult h = HinfNorm(CloseLoop(sys, F));
  if (!std::isfinite(h.value) || h.value > gamma * (1.0 + rel_tol)) {
    throw VerificationFailed("closed-loop H-infinity norm " + std::to_string(h.value) +
                                 " exceeds gamma " + std::to_string(gamma),
                             h.value);
  }
  return h;
}

}  // namespace hinfsparse
