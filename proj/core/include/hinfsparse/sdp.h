#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace hinfsparse::sdp {

enum class VariableKind { kSymmetric, kRectangular };

/// A named matrix-valued decision variable. Symmetric n×n blocks are
/// parametrized by their upper triangle (column by column), rectangular
/// blocks by all entries in row-major order.
struct VariableBlock {
  std::string name;
  VariableKind kind = VariableKind::kRectangular;
  int rows = 0;
  int cols = 0;
  int offset = 0;  // index of the first scalar in the stacked vector y

  int Size() const {
    return kind == VariableKind::kSymmetric ? rows * (rows + 1) / 2 : rows * cols;
  }
  bool operator==(const VariableBlock&) const = default;
};

/// One nonzero of a symmetric coefficient matrix; row <= col.
struct SymmetricEntry {
  int row = 0;
  int col = 0;
  double value = 0.0;
  bool operator==(const SymmetricEntry&) const = default;
};

enum class ConeKind { kPsd, kNonnegative };

/// G0 + Σ_s y_s G_s ⪰ 0 (kPsd) or ≥ 0 entrywise on a vector (kNonnegative,
/// where only diagonal entries are used).
struct AffineConstraint {
  std::string name;
  ConeKind cone = ConeKind::kPsd;
  int dim = 0;
  Eigen::MatrixXd constant;    // dim×dim, or dim×1 for kNonnegative
  std::vector<int> variables;  // sorted scalar indices with nonzero G_s
  std::vector<std::vector<SymmetricEntry>> coefficients;

  bool operator==(const AffineConstraint&) const;
};

class SdpProblem;

/// Read access to the matrices encoded by a stacked scalar vector.
class Assignment {
 public:
  Assignment(const SdpProblem& problem, const Eigen::VectorXd& y) : problem_(problem), y_(y) {}
  Eigen::MatrixXd operator[](int block) const;

 private:
  const SdpProblem& problem_;
  const Eigen::VectorXd& y_;
};

/// Semidefinite program in inequality form:
///   minimize cᵀy  subject to  G0_k + Σ_s y_s G_s,k ⪰ 0  for every constraint k.
/// Constraints are declared as affine maps of the variable blocks and compiled
/// to sparse coefficient matrices once.
class SdpProblem {
 public:
  using MatrixMap = std::function<Eigen::MatrixXd(const Assignment&)>;
  using VectorMap = std::function<Eigen::VectorXd(const Assignment&)>;

  int AddSymmetric(std::string name, int n);
  int AddMatrix(std::string name, int rows, int cols);
  int AddScalar(std::string name) { return AddMatrix(std::move(name), 1, 1); }

  /// map must be affine in the variables and return a symmetric dim×dim
  /// matrix; throws DimensionError otherwise.
  void AddPsdConstraint(std::string name, int dim, const MatrixMap& map);
  /// map must be affine and return a vector of length dim.
  void AddNonnegative(std::string name, int dim, const VectorMap& map);

  /// Coefficient of a single scalar in the minimized objective.
  void SetObjective(int scalar, double coefficient);
  /// Objective Σ coef(i,j)·V(i,j) over the stored scalars of a block.
  void SetObjective(int block, const Eigen::MatrixXd& coefficients);

  int ScalarIndex(int block, int row, int col) const;
  int NumScalars() const { return num_scalars_; }
  const std::vector<VariableBlock>& variables() const { return variables_; }
  const std::vector<AffineConstraint>& constraints() const { return constraints_; }
  const Eigen::VectorXd& objective() const { return objective_; }

  Eigen::MatrixXd Value(int block, const Eigen::VectorXd& y) const;
  /// G0 + Σ y_s G_s of one constraint (a column vector for kNonnegative).
  Eigen::MatrixXd Evaluate(int constraint, const Eigen::VectorXd& y) const;

  bool operator==(const SdpProblem& other) const;

 private:
  AffineConstraint Compile(std::string name, ConeKind cone, int dim, const MatrixMap& map) const;

  std::vector<VariableBlock> variables_;
  std::vector<AffineConstraint> constraints_;
  Eigen::VectorXd objective_;
  int num_scalars_ = 0;
};

enum class SolveStatus {
  kOptimal,
  kInfeasible,
  kMaxIterations,
  kNumericalProblems,
};

const char* ToString(SolveStatus status);

struct SolveResult {
  SolveStatus status = SolveStatus::kNumericalProblems;
  Eigen::VectorXd y;
  double primal_objective = 0.0;  // cᵀy
  double dual_objective = 0.0;    // −<G0, X>
  double primal_residual = 0.0;   // relative ||G0 + Σ y G − S||
  double dual_residual = 0.0;     // relative ||c − <G, X>||
  double gap = 0.0;               // relative complementarity gap
  int iterations = 0;
};

/// True for kOptimal, or for an early stop whose residuals and gap are all
/// below loose_tolerance.
bool IsUsable(const SolveResult& result, double loose_tolerance = 1e-6);

/// Pluggable solver so that region synthesis and the weighted-ℓ1 step share
/// one dependency.
class SdpBackend {
 public:
  virtual ~SdpBackend() = default;
  virtual SolveResult Solve(const SdpProblem& problem) const = 0;
  virtual std::string Name() const = 0;
};

struct InteriorPointOptions {
  double tolerance = 1e-8;
  int max_iterations = 100;
  double step_fraction = 0.98;
  bool verbose = false;
};

/// Infeasible-start primal-dual path-following method with the HKM search
/// direction and Mehrotra predictor-corrector steps. Dense blocks; Schur
/// complement formed from the sparse coefficient matrices.
class InteriorPointSolver final : public SdpBackend {
 public:
  InteriorPointSolver() = default;
  explicit InteriorPointSolver(InteriorPointOptions options) : options_(options) {}

  SolveResult Solve(const SdpProblem& problem) const override;
  std::string Name() const override { return "hkm-interior-point"; }
  const InteriorPointOptions& options() const { return options_; }

 private:
  InteriorPointOptions options_;
};

/// Process-wide default backend.
std::shared_ptr<const SdpBackend> DefaultBackend();

}  // namespace hinfsparse::sdp
