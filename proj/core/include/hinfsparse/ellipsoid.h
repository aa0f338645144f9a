#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "hinfsparse/lti.h"
#include "hinfsparse/sdp.h"

namespace hinfsparse {

struct SynthesisOptions {
  /// Margin ε turning the strict LMIs into non-strict ones. Unset means
  /// DefaultStrictness(sys).
  std::optional<double> strictness_eps;
  /// κ in μI ⪯ P ⪯ κμI (μ a free scalar ≥ margin), which bounds cond(P);
  /// unset removes the cap (P ⪰ margin·I instead).
  std::optional<double> condition_cap = 100.0;
  /// When the LMIs are infeasible under condition_cap, the cap is raised
  /// 100-fold and the solve repeated, up to this value.
  double condition_cap_limit = 1e6;
  /// Upper limit on the maximized margin. Without it the optimum is not
  /// attained whenever the LMIs admit arbitrarily large slack.
  double margin_cap = 1.0;
  double solver_tol = 1e-8;
  bool allow_theta_above_one = false;
  /// Maximize a common slack t over all definiteness constraints instead of
  /// solving the fixed-ε feasibility problem.
  bool maximize_margin = true;
  /// Relative slack granted to the final H∞ check of the center gain.
  double verify_rel_tol = 1e-6;

  /// Throws Error on out-of-range fields.
  void Validate() const;
};

/// 10⁻⁶·(1 + ‖A‖₂).
double DefaultStrictness(const StateSpaceSystem& sys);

/// Certificates of the synthesis LMIs.
struct SdpSolution {
  Eigen::MatrixXd P;
  Eigen::MatrixXd Xhat;
  Eigen::MatrixXd Yhat;
  Eigen::MatrixXd Zhat;
  /// Smallest eigenvalue over P, Ẑ and −(LMI block matrix), recomputed from
  /// the returned matrices.
  double margin = 0.0;
  std::string solver_status;
  int solver_iterations = 0;
  /// The cap in force for the returned certificates (unset if uncapped).
  std::optional<double> condition_cap;
};

/// {F : (F − F_o) Z (F − F_o)ᵀ ⪯ θ R}, every member of which achieves the
/// attenuation level gamma when θ ≤ 1.
struct EllipsoidRegion {
  Eigen::MatrixXd F_o;
  Eigen::MatrixXd Z;
  Eigen::MatrixXd R;
  Eigen::MatrixXd Zinv;
  double gamma = 0.0;
  bool allow_theta_above_one = false;

  int m() const { return static_cast<int>(F_o.rows()); }
  int n() const { return static_cast<int>(F_o.cols()); }
  /// Checks shapes, Z ≻ 0, R ⪰ 0 and Zinv·Z = I to tolerance.
  void Validate(double tol = 1e-6) const;
  /// Builds Zinv from Z.
  static EllipsoidRegion FromParts(Eigen::MatrixXd F_o, Eigen::MatrixXd Z, Eigen::MatrixXd R,
                                   double gamma);
};

/// The LMI-side problem together with the indices of its variable blocks.
struct SynthesisLmis {
  sdp::SdpProblem problem;
  int P = -1;
  int Xhat = -1;
  int Yhat = -1;
  int Zhat = -1;
  int margin = -1;  // the scalar t when the margin is maximized, else -1
};

/// Block matrix [[Q11, Q12], [Q12ᵀ, Q22]] + [Bv; Dgv][Bv; Dgv]ᵀ, which must be
/// negative definite.
Eigen::MatrixXd SynthesisLmiMatrix(const StateSpaceSystem& sys, double gamma,
                                   const Eigen::MatrixXd& P, const Eigen::MatrixXd& Xhat,
                                   const Eigen::MatrixXd& Yhat, const Eigen::MatrixXd& Zhat);

/// Feasibility form with fixed margin ε: X̂ ⪯ 0, P ⪰ εI (or μI ⪯ P ⪯ κμI
/// with μ ≥ ε when capped), Ẑ ⪰ εI, −SynthesisLmiMatrix ⪰ εI. Zero objective.
SynthesisLmis AssembleSynthesisLmis(const StateSpaceSystem& sys, double gamma,
                                    const SynthesisOptions& opts);

/// Margin form: maximize t ≤ margin_cap subject to −X̂ ⪰ tI, Ẑ ⪰ tI,
/// −SynthesisLmiMatrix ⪰ tI and either μI ⪯ P ⪯ κμI with μ ≥ t, or P ⪰ tI.
SynthesisLmis AssembleMaxMarginLmis(const StateSpaceSystem& sys, double gamma,
                                    const SynthesisOptions& opts);

/// Which quadratic form defines the radius.
enum class RadiusFormula {
  kCompletedSquare,  // R = Y Z⁻¹ Yᵀ − X  (= −X̂)
  kYZYt,             // R = Y Z Yᵀ − X
};

/// F_o = −Ŷ P⁻¹, Z = P Ẑ⁻¹ P, R from X = X̂ + Ŷ Ẑ⁻¹ Ŷᵀ and Y = Ŷ Ẑ⁻¹ P.
/// Throws NumericalError if P or Ẑ is not positive definite or R is
/// indefinite.
EllipsoidRegion DeriveEllipsoid(const SdpSolution& sol, double gamma,
                                RadiusFormula formula = RadiusFormula::kCompletedSquare);

struct SynthesisResult {
  SdpSolution solution;
  EllipsoidRegion region;
  HinfResult center_hinf;
};

/// Solves the LMIs and derives the region, escalating the condition cap as
/// described in SynthesisOptions. Throws InfeasibleError when the achieved
/// margin is below ε under every cap tried and VerificationFailed when the
/// center gain does not pass the independent H∞ check.
SynthesisResult SynthesizeRegion(const StateSpaceSystem& sys, double gamma,
                                 const SynthesisOptions& opts = {},
                                 const sdp::SdpBackend& backend = *sdp::DefaultBackend());

/// λ_min(θR − (F − F_o) Z (F − F_o)ᵀ).
double MembershipSlack(const EllipsoidRegion& region, const FeedbackGain& F, double theta);

/// MembershipSlack ≥ −tol. Throws Error for θ < 0, or θ > 1 unless the
/// region allows it.
bool Membership(const EllipsoidRegion& region, const FeedbackGain& F, double theta,
                double tol = 1e-8);

/// [[θR, F − F_o], [(F − F_o)ᵀ, Z⁻¹]].
Eigen::MatrixXd SchurConstraint(const EllipsoidRegion& region, const FeedbackGain& F, double theta);

/// F_o + √θ R^{1/2} U Z^{−1/2}; on the boundary when σ_max(U) = 1.
FeedbackGain SampleBoundary(const EllipsoidRegion& region, double theta, const Eigen::MatrixXd& U);

/// H∞ norm of the loop closed with F; throws VerificationFailed unless it is
/// finite and at most gamma·(1 + rel_tol).
HinfResult VerifyAttenuation(const StateSpaceSystem& sys, const FeedbackGain& F, double gamma,
                             double rel_tol = 1e-6);

}  // namespace hinfsparse
