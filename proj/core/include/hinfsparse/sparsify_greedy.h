#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "hinfsparse/ellipsoid.h"
#include "hinfsparse/lti.h"
#include "hinfsparse/power_method.h"

namespace hinfsparse {

/// How a candidate elimination is scored; smaller is better in every case.
enum class GreedyCriterion {
  kMaxEig,  // λ_max(E⁻¹)
  kTrace,   // Σ λ_i(E⁻¹)
  kLogDet,  // log det(E⁻¹)
};

struct GreedyConfig {
  double theta = 0.5;
  GreedyCriterion criterion = GreedyCriterion::kMaxEig;
  double power_tol = 1e-8;
  int power_max_iters = 1000;
  /// Stop after this many eliminations.
  std::optional<int> sparsity_budget;
  /// Accepted steps between full re-inversions of E.
  int recompute_period = 25;
  /// A candidate is admissible when λ_min(I₂ + H VᵀE⁻¹V) > pd_margin.
  double pd_margin = 1e-10;
  /// Re-invert whenever ‖E⁻¹E − I‖_F exceeds this after a step.
  double drift_tol = 1e-6;
  double membership_tol = 1e-8;

  void Validate() const;
};

/// E = [[θR, F − F_o], [(F − F_o)ᵀ, Z⁻¹]] for the current gain, its maintained
/// inverse and the support of F in row-major order.
struct GreedyState {
  double theta = 0.0;
  Eigen::MatrixXd F;
  Eigen::MatrixXd E;
  Eigen::MatrixXd Einv;
  std::vector<std::pair<int, int>> support;
  int k = 0;
  /// Dominant eigenvector of Einv, reused to start the power iterations.
  Eigen::VectorXd top_vector;
};

/// Zeroing F_ij as E + V H Vᵀ with V = [v1 v2], v1 = (e_i + e_{m+j})/√2,
/// v2 = (e_i − e_{m+j})/√2 and H = diag(−F_ij, F_ij).
struct RankTwoUpdate {
  int i = 0;
  int j = 0;
  Eigen::VectorXd v1;
  Eigen::VectorXd v2;
  Eigen::Matrix2d H;

  static RankTwoUpdate Eliminate(int m, int n, int i, int j, double f_ij);
  Eigen::MatrixXd V() const;
};

/// −F_ij·[[0, Δ(i,j)], [Δ(i,j)ᵀ, 0]] with Δ(i,j) the single-entry indicator;
/// the same perturbation V H Vᵀ builds.
Eigen::MatrixXd EliminationPerturbation(int m, int n, int i, int j, double f_ij);

/// Starts from F = F_o. Throws DegenerateRegion when θ = 0 or R is singular.
GreedyState InitState(const EllipsoidRegion& region, double theta);

/// Woodbury: Einv − Einv V (H⁻¹ + Vᵀ Einv V)⁻¹ Vᵀ Einv. Throws SingularUpdate
/// if H or the capacitance matrix is singular.
Eigen::MatrixXd ApplyUpdate(const Eigen::MatrixXd& Einv, const RankTwoUpdate& upd);

/// True iff E + V H Vᵀ ≻ 0, read off the 2×2 matrix I₂ + H VᵀEinvV (whose
/// eigenvalues are real); margin tightens the strict inequality.
bool CandidateIsPd(const Eigen::MatrixXd& Einv, const RankTwoUpdate& upd, double margin = 0.0);

/// Score of an explicit inverse: power-iteration λ_max, trace, or log det.
double Score(const Eigen::MatrixXd& Einv, GreedyCriterion criterion, const GreedyConfig& cfg = {});

struct GreedyChoice {
  int i = 0;
  int j = 0;
  double score = 0.0;
};

struct GreedyStepRecord {
  int i = 0;
  int j = 0;
  double score = 0.0;
  double lambda_min_E = 0.0;
  int nnz = 0;
};

struct PowerStats {
  int calls = 0;
  int restarts = 0;
  int fallbacks = 0;
};

/// The admissible elimination with the smallest score (ties: smaller |F_ij|,
/// then row-major order), or nothing when every candidate would leave the
/// region.
std::optional<GreedyChoice> Step(const GreedyState& state, const GreedyConfig& cfg,
                                 PowerStats* stats = nullptr);

struct GreedyResult {
  FeedbackGain gain;
  std::vector<GreedyStepRecord> steps;
  /// θ = 0 or singular R: nothing was eliminated and gain = F_o.
  bool degenerate = false;
  int refreshes = 0;
  PowerStats power;
  std::optional<HinfResult> hinf;
};

/// Eliminates entries one at a time until no admissible candidate is left or
/// the budget is spent. When sys is given the final gain is checked against
/// the region's H∞ level (VerificationFailed on violation).
GreedyResult RunGreedy(const EllipsoidRegion& region, const GreedyConfig& cfg,
                       const StateSpaceSystem* sys = nullptr);

}  // namespace hinfsparse
