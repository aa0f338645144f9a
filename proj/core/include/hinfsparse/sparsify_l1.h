#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "hinfsparse/ellipsoid.h"
#include "hinfsparse/lti.h"
#include "hinfsparse/sdp.h"

namespace hinfsparse {

/// Norm used in the relative-change stopping test.
enum class StoppingNorm { kSpectral, kFrobenius };

struct ReweightConfig {
  double theta = 0.5;
  double zeta = 1e-3;
  double eps_d = 1e-3;
  int max_iters = 20;
  /// Weights are updated after each of the first reweight_iters solves and
  /// frozen afterwards.
  int reweight_iters = 4;
  double truncation_threshold = 5e-5;
  StoppingNorm norm = StoppingNorm::kSpectral;
  double membership_tol = 1e-8;

  void Validate() const;
};

struct ReweightRecord {
  Eigen::MatrixXd W;       // weights used for this solve
  Eigen::MatrixXd F;       // minimizer
  double eps = 0.0;        // relative change against the previous iterate
  int nnz = 0;             // entries with |F_ij| > truncation_threshold
  double objective = 0.0;  // Σ W_ij |F_ij|
};

struct ReweightHistory {
  std::vector<ReweightRecord> iterations;
  bool converged = false;
  int truncated = 0;  // entries zeroed by the final truncation
  int restored = 0;   // truncated entries put back to keep membership
};

struct ReweightResult {
  FeedbackGain gain;
  ReweightHistory history;
  /// Set when a plant was supplied for the final check.
  std::optional<HinfResult> hinf;
};

/// argmin Σ W_ij |F_ij| subject to SchurConstraint(region, F, theta) ⪰ 0.
/// The weights are normalized by their maximum before solving, so positive
/// rescaling of W does not change the result. If objective is non-null it
/// receives Σ W_ij |F_ij| at the returned gain.
FeedbackGain WeightedL1Step(const EllipsoidRegion& region, double theta, const Eigen::MatrixXd& W,
                            const sdp::SdpBackend& backend = *sdp::DefaultBackend(),
                            double* objective = nullptr);

/// W_ij = 1 / (|F_ij| + zeta).
Eigen::MatrixXd UpdateWeights(const FeedbackGain& F, double zeta);

/// ‖F_next − F_prev‖ / ‖F_next‖, with 0/0 = 0 and x/0 = +infinity.
double StoppingRatio(const FeedbackGain& F_next, const FeedbackGain& F_prev,
                     StoppingNorm norm = StoppingNorm::kSpectral);

/// Zeroes entries with |F_ij| < threshold; if that breaks membership at
/// theta, truncated entries are restored largest first until it holds again.
/// restored (if non-null) receives the number of entries put back.
FeedbackGain Truncate(const FeedbackGain& F, double threshold, const EllipsoidRegion& region,
                      double theta, double tol = 1e-8, int* restored = nullptr);

/// Iterated weighted-ℓ1 minimization followed by truncation. When sys is
/// given the final gain is also checked against the H∞ level of the region
/// (VerificationFailed on violation).
ReweightResult ReweightedL1(const EllipsoidRegion& region, const ReweightConfig& config,
                            const sdp::SdpBackend& backend = *sdp::DefaultBackend(),
                            const StateSpaceSystem* sys = nullptr);

}  // namespace hinfsparse
