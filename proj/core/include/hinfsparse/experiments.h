#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hinfsparse/ellipsoid.h"
#include "hinfsparse/lti.h"
#include "hinfsparse/sparsify_greedy.h"
#include "hinfsparse/sparsify_l1.h"

namespace hinfsparse {

/// Plant with i.i.d. standard normal A (n×n) and B (n×m), C = I, Dgu = Dgv =
/// eye(n, m) and Bv = B.
struct DenseGaussianConfig {
  int n = 30;
  int m = 30;
  std::uint64_t seed = 0;

  void Validate() const;
};

/// Agents uniform in the unit square with couplings
/// A_ij = c_ij·exp(−α‖p_i − p_j‖^β) when ‖p_i − p_j‖ ≤ r, else 0, c_ij
/// standard normal. The diagonal is included (distance 0). B = C = Dgu = Dgv =
/// I and Bv = bv_scale·I.
struct SpatialDecayConfig {
  int n = 30;
  double alpha = 1.0;
  double beta = 1.0;
  double r = 0.25;
  double bv_scale = 4.0;
  std::uint64_t seed = 0;

  void Validate() const;
};

StateSpaceSystem GenDenseGaussian(const DenseGaussianConfig& cfg);

/// positions, if given, receives the n×2 agent coordinates.
StateSpaceSystem GenSpatialDecay(const SpatialDecayConfig& cfg,
                                 Eigen::MatrixX2d* positions = nullptr);

/// Quality of a sparse design against the region center.
struct DesignMetrics {
  double sigma_d = 0.0;  // 100·nnz(F)/nnz(F_o)
  double sigma_p = 0.0;  // 100·(‖G_F‖ − ‖G_Fo‖)/‖G_Fo‖, +inf if F destabilizes
  double hinf_sparse = 0.0;
  double hinf_center = 0.0;
  int nnz_sparse = 0;
  int nnz_center = 0;
  bool stable = true;
};

/// Zero entries count as absent; an all-zero F_o yields sigma_d = 100 when F
/// is also zero.
DesignMetrics ComputeMetrics(const FeedbackGain& F, const EllipsoidRegion& region,
                             const StateSpaceSystem& sys);

/// Same as above with the center H∞ norm already known.
DesignMetrics ComputeMetrics(const FeedbackGain& F, const FeedbackGain& F_o, double hinf_center,
                             const StateSpaceSystem& sys);

struct GammaFloorOptions {
  double rel_tol = 1e-2;
  /// Largest γ tried before giving up.
  double cap = 1e6;
  SynthesisOptions synthesis;
};

/// Approximately minimal γ at which SynthesizeRegion succeeds: the returned
/// value is feasible and value/(1 + rel_tol) was found infeasible (or is below
/// the smallest bracket tried). Throws InfeasibleError if nothing up to cap
/// is feasible.
double GammaFloor(const StateSpaceSystem& sys, const GammaFloorOptions& opts = {},
                  const sdp::SdpBackend& backend = *sdp::DefaultBackend());

/// True iff SynthesizeRegion succeeds at gamma.
bool GammaFeasible(const StateSpaceSystem& sys, double gamma, const SynthesisOptions& opts = {},
                   const sdp::SdpBackend& backend = *sdp::DefaultBackend());

enum class Method { kL1, kGreedy };

std::string MethodName(Method method);
/// Inverse of MethodName; throws Error on unknown names.
Method ParseMethod(const std::string& name);

struct SweepConfig {
  std::vector<double> thetas = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<Method> methods = {Method::kL1, Method::kGreedy};
  ReweightConfig l1;    // theta is overridden per cell
  GreedyConfig greedy;  // theta is overridden per cell
  /// Cells evaluated concurrently; results do not depend on it.
  int threads = 1;
};

struct SweepRow {
  double theta = 0.0;
  Method method = Method::kL1;
  std::uint64_t seed = 0;
  DesignMetrics metrics;
  /// H∞ norm of the sparse gain at most γ·(1 + verify_rel_tol).
  bool verified = false;
  std::string failure;  // empty unless the cell failed
  FeedbackGain gain;
};

/// Sparsify one design with the given method at theta.
FeedbackGain Sparsify(const EllipsoidRegion& region, Method method, double theta,
                      const SweepConfig& cfg, const sdp::SdpBackend& backend);

/// One row per (θ, method), in the order thetas × methods. The region is
/// shared across cells; seed labels the rows.
std::vector<SweepRow> ThetaSweep(const StateSpaceSystem& sys, const EllipsoidRegion& region,
                                 double center_hinf, std::uint64_t seed, const SweepConfig& cfg,
                                 const sdp::SdpBackend& backend = *sdp::DefaultBackend());

/// Synthesizes the region at gamma, then sweeps. Throws InfeasibleError before
/// any sweeping if gamma is infeasible.
std::vector<SweepRow> ThetaSweep(const StateSpaceSystem& sys, double gamma, std::uint64_t seed,
                                 const SweepConfig& cfg, const SynthesisOptions& synthesis = {},
                                 const sdp::SdpBackend& backend = *sdp::DefaultBackend());

struct PerturbationStudyConfig {
  double magnitude = 0.5;
  int samples = 5000;
  std::uint64_t seed = 0;

  void Validate() const;
};

/// For each sample, adds magnitude·N(0, 1) to every nonzero entry of F_s and
/// returns 100·(‖G_perturbed‖ − ‖G_Fs‖)/‖G_Fs‖, or +inf when the perturbed
/// loop is not Hurwitz. Throws Error if F_s is not stabilizing.
std::vector<double> PerturbationStudy(const StateSpaceSystem& sys, const FeedbackGain& F_s,
                                      const PerturbationStudyConfig& cfg);

/// Empirical quantile (nearest rank, q in [0, 1]) of samples with +inf
/// treated as larger than every finite value.
double EmpiricalQuantile(std::vector<double> samples, double q);

}  // namespace hinfsparse
