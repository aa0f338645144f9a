#include "hinfsparse/sdp.h"

#include <spdlog/spdlog.h>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <limits>

#include "hinfsparse/errors.h"

namespace hinfsparse::sdp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Solver-side copy of one constraint.
struct Block {
  bool psd = true;
  int dim = 0;
  Eigen::MatrixXd G0;
  Eigen::VectorXd g0;  // kNonnegative only
  std::vector<int> vars;
  SparseMatrix G;                             // psd: column j = vec(G_j) over all dim² entries
  std::vector<std::vector<Triplet>> entries;  // psd: both triangles per var
  std::vector<double> norms;                  // ||G_j||_F
  // psd only, set when every G_j has rank at most kMaxFactorRank and the
  // factored Schur formula is cheaper: G_j = sum over its columns r of
  // factor_scale(r) * factors.col(r) * factors.col(r)^T.
  Eigen::MatrixXd factors;
  Eigen::VectorXd factor_scale;
  std::vector<int> factor_owner;  // local variable index of each column
};

constexpr int kMaxFactorRank = 4;

// Eigen-factors the coefficients of a PSD block whose coefficients are dense
// on average. Leaves the block unfactored when some coefficient has higher
// rank or the entrywise Schur build is cheaper.
void FactorCoefficients(Block& b) {
  const int nv = static_cast<int>(b.vars.size());
  const double dim = b.dim;
  double nnz = 0.0;
  for (const auto& ent : b.entries) nnz += static_cast<double>(ent.size());
  if (nv == 0 || nnz <= nv * dim) return;
  std::vector<Eigen::VectorXd> cols;
  std::vector<double> scales;
  std::vector<int> owners;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  Eigen::MatrixXd C(b.dim, b.dim);
  for (int j = 0; j < nv; ++j) {
    C.setZero();
    for (const auto& e : b.entries[static_cast<std::size_t>(j)]) C(e.row(), e.col()) += e.value();
    eig.compute(C);
    const Eigen::VectorXd& lam = eig.eigenvalues();
    const double tol = 1e-13 * std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
    int rank = 0;
    for (int r = 0; r < b.dim; ++r) {
      if (std::abs(lam(r)) <= tol) continue;
      if (++rank > kMaxFactorRank) return;
      cols.push_back(eig.eigenvectors().col(r));
      scales.push_back(lam(r));
      owners.push_back(j);
    }
  }
  const double nf = static_cast<double>(cols.size());
  const double entrywise_cost = nnz * nv + nv * dim * dim * dim;
  const double factored_cost = 2.0 * dim * nf * nf + nf * nf;
  if (factored_cost >= entrywise_cost) return;
  const auto total = static_cast<Eigen::Index>(cols.size());
  b.factors.resize(b.dim, total);
  for (Eigen::Index r = 0; r < total; ++r) b.factors.col(r) = cols[static_cast<std::size_t>(r)];
  b.factor_scale = Eigen::Map<const Eigen::VectorXd>(scales.data(), total);
  b.factor_owner = std::move(owners);
}

struct Iterate {
  Eigen::VectorXd y;
  std::vector<Eigen::MatrixXd> X, S;  // psd blocks
  std::vector<Eigen::VectorXd> x, s;  // nonnegative blocks (indexed like X)
};

Block MakeBlock(const AffineConstraint& con) {
  Block b;
  b.psd = con.cone == ConeKind::kPsd;
  b.dim = con.dim;
  b.vars = con.variables;
  const int nv = static_cast<int>(con.variables.size());
  std::vector<Triplet> trips;
  b.entries.resize(nv);
  b.norms.assign(nv, 0.0);
  if (b.psd) {
    b.G0 = con.constant;
    for (int j = 0; j < nv; ++j) {
      double sq = 0.0;
      for (const auto& e : con.coefficients[j]) {
        b.entries[j].emplace_back(e.row, e.col, e.value);
        trips.emplace_back(e.row + e.col * b.dim, j, e.value);
        sq += e.value * e.value;
        if (e.row != e.col) {
          b.entries[j].emplace_back(e.col, e.row, e.value);
          trips.emplace_back(e.col + e.row * b.dim, j, e.value);
          sq += e.value * e.value;
        }
      }
      b.norms[j] = std::sqrt(sq);
    }
    b.G.resize(b.dim * b.dim, nv);
    b.G.setFromTriplets(trips.begin(), trips.end());
    b.G.makeCompressed();
    FactorCoefficients(b);
    return b;
  } else {
    b.g0 = con.constant.col(0);
    for (int j = 0; j < nv; ++j) {
      double sq = 0.0;
      for (const auto& e : con.coefficients[j]) {
        trips.emplace_back(e.row, j, e.value);
        sq += e.value * e.value;
      }
      b.norms[j] = std::sqrt(sq);
    }
    b.G.resize(b.dim, nv);
  }
  b.G.setFromTriplets(trips.begin(), trips.end());
  b.G.makeCompressed();
  return b;
}

Eigen::VectorXd Gather(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out(k) = v(idx[k]);
  return out;
}

Eigen::MatrixXd Unvec(const Eigen::VectorXd& v, int dim) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), dim, dim);
}

double Inner(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) { return A.cwiseProduct(B).sum(); }

// Largest alpha with X + alpha dX ⪰ 0 (infinity if unbounded).
double MaxStepPsd(const Eigen::MatrixXd& X, const Eigen::MatrixXd& dX) {
  Eigen::LLT<Eigen::MatrixXd> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  Eigen::MatrixXd W = llt.matrixL().solve(dX);
  W = llt.matrixL().solve(W.transpose().eval()).transpose().eval();
  W = 0.5 * (W + W.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  return lmin < 0.0 ? -1.0 / lmin : kInf;
}

double MaxStepNonneg(const Eigen::VectorXd& x, const Eigen::VectorXd& dx) {
  double alpha = kInf;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (dx(k) < 0.0) alpha = std::min(alpha, -x(k) / dx(k));
  }
  return alpha;
}

class Solver {
 public:
  Solver(const SdpProblem& problem, const InteriorPointOptions& options)
      : options_(options), n_(problem.NumScalars()), c_(problem.objective()) {
    for (const auto& con : problem.constraints()) blocks_.push_back(MakeBlock(con));
    std::vector<bool> used(static_cast<std::size_t>(n_), false);
    for (const auto& b : blocks_) {
      for (int v : b.vars) used[static_cast<std::size_t>(v)] = true;
      total_dim_ += b.dim;
      g0_norm_sq_ += b.psd ? b.G0.squaredNorm() : b.g0.squaredNorm();
    }
    for (int v = 0; v < n_; ++v) {
      if (!used[static_cast<std::size_t>(v)]) {
        throw Error("SDP scalar " + std::to_string(v) + " does not appear in any constraint");
      }
    }
    FindDiagonalVariables();
  }

  SolveResult Run() {
    Initialize();
    SolveResult result;
    result.y = it_.y;
    SolveResult best;
    double best_score = kInf;
    int stalled = 0;
    int since_progress = 0;
    for (int iter = 0; iter <= options_.max_iterations; ++iter) {
      if (!ComputeResiduals()) {
        result.status = SolveStatus::kNumericalProblems;
        break;
      }
      Fill(result, iter);
      const double score = std::max({result.primal_residual, result.dual_residual, result.gap});
      since_progress = score < 0.5 * best_score ? 0 : since_progress + 1;
      if (score < best_score) {
        best_score = score;
        best = result;
      }
      if (options_.verbose) {
        spdlog::info(
            "sdp it {:3d} pobj {: .8e} dobj {: .8e} pinf {:.2e} dinf "
            "{:.2e} gap {:.2e}",
            iter, result.primal_objective, result.dual_objective, result.primal_residual,
            result.dual_residual, result.gap);
      }
      if (result.primal_residual <= options_.tolerance &&
          result.dual_residual <= options_.tolerance && result.gap <= options_.tolerance) {
        result.status = SolveStatus::kOptimal;
        return result;
      }
      if (DetectInfeasible()) {
        result.status = SolveStatus::kInfeasible;
        return result;
      }
      if (since_progress >= 8) {
        result.status = SolveStatus::kNumericalProblems;
        break;
      }
      if (iter == options_.max_iterations) {
        result.status = SolveStatus::kMaxIterations;
        break;
      }
      double alpha_p = 0.0, alpha_d = 0.0;
      if (!Step(&alpha_p, &alpha_d)) {
        result.status = SolveStatus::kNumericalProblems;
        break;
      }
      stalled = (alpha_p < 1e-8 && alpha_d < 1e-8) ? stalled + 1 : 0;
      if (stalled >= 3) {
        result.status = SolveStatus::kNumericalProblems;
        break;
      }
    }
    // Late iterations can lose accuracy; report the best iterate seen.
    if (best_score < kInf) {
      best.status = result.status;
      best.iterations = result.iterations;
      return best;
    }
    return result;
  }

 private:
  void Initialize() {
    it_.y = Eigen::VectorXd::Zero(n_);
    it_.X.resize(blocks_.size());
    it_.S.resize(blocks_.size());
    it_.x.resize(blocks_.size());
    it_.s.resize(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const Block& b = blocks_[k];
      const double dim = b.dim;
      double xi = std::max(10.0, std::sqrt(dim));
      double eta = xi;
      double gmax = b.psd ? b.G0.norm() : b.g0.norm();
      for (std::size_t j = 0; j < b.vars.size(); ++j) {
        xi = std::max(xi, dim * (1.0 + std::abs(c_(b.vars[j]))) / (1.0 + b.norms[j]));
        gmax = std::max(gmax, b.norms[j]);
      }
      eta = std::max(eta, (1.0 + gmax) / std::sqrt(dim));
      if (b.psd) {
        it_.X[k] = xi * Eigen::MatrixXd::Identity(b.dim, b.dim);
        it_.S[k] = eta * Eigen::MatrixXd::Identity(b.dim, b.dim);
      } else {
        it_.x[k] = Eigen::VectorXd::Constant(b.dim, xi);
        it_.s[k] = Eigen::VectorXd::Constant(b.dim, eta);
      }
    }
  }

  // Residuals, inverses and mu at the current iterate.
  bool ComputeResiduals() {
    const std::size_t nb = blocks_.size();
    Sinv_.resize(nb);
    Rp_.resize(nb);
    rp_.resize(nb);
    rd_ = c_;
    mu_ = 0.0;
    double rp_sq = 0.0;
    dual_obj_ = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      const Block& b = blocks_[k];
      const Eigen::VectorXd yl = Gather(it_.y, b.vars);
      Eigen::VectorXd gx;
      if (b.psd) {
        Eigen::LLT<Eigen::MatrixXd> llt(it_.S[k]);
        if (llt.info() != Eigen::Success) return false;
        Sinv_[k] = llt.solve(Eigen::MatrixXd::Identity(b.dim, b.dim));
        Sinv_[k] = 0.5 * (Sinv_[k] + Sinv_[k].transpose()).eval();
        const Eigen::VectorXd gy = b.G * yl;
        Rp_[k] = b.G0 + Unvec(gy, b.dim) - it_.S[k];
        rp_sq += Rp_[k].squaredNorm();
        mu_ += Inner(it_.X[k], it_.S[k]);
        dual_obj_ -= Inner(b.G0, it_.X[k]);
        const Eigen::Map<const Eigen::VectorXd> xv(it_.X[k].data(), it_.X[k].size());
        gx = b.G.transpose() * xv;
      } else {
        rp_[k] = b.g0 + b.G * yl - it_.s[k];
        rp_sq += rp_[k].squaredNorm();
        mu_ += it_.x[k].dot(it_.s[k]);
        dual_obj_ -= b.g0.dot(it_.x[k]);
        gx = b.G.transpose() * it_.x[k];
      }
      for (std::size_t j = 0; j < b.vars.size(); ++j) rd_(b.vars[j]) -= gx(j);
    }
    if (!std::isfinite(mu_) || !rd_.allFinite()) return false;
    gap_abs_ = mu_;
    mu_ /= total_dim_;
    primal_res_ = std::sqrt(rp_sq) / (1.0 + std::sqrt(g0_norm_sq_));
    dual_res_ = rd_.norm() / (1.0 + c_.norm());
    return true;
  }

  void Fill(SolveResult& r, int iter) const {
    r.y = it_.y;
    r.primal_objective = c_.dot(it_.y);
    r.dual_objective = dual_obj_;
    r.primal_residual = primal_res_;
    r.dual_residual = dual_res_;
    r.gap = gap_abs_ / (1.0 + std::abs(r.primal_objective) + std::abs(r.dual_objective));
    r.iterations = iter;
  }

  // X ⪰ 0 with <G_s, X> ≈ 0 for all s and <G0, X> < 0 certifies that no y
  // makes every constraint PSD.
  bool DetectInfeasible() const {
    if (!(dual_obj_ > 0.0)) return false;
    const Eigen::VectorXd g = c_ - rd_;  // <G_s, X>
    return dual_obj_ > 1e8 * (1.0 + c_.norm()) && g.norm() / dual_obj_ < 1e-8;
  }

  void BuildSchur() {
    M_.setZero(n_, n_);
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const Block& b = blocks_[k];
      const int nv = static_cast<int>(b.vars.size());
      Eigen::MatrixXd Mb;
      if (b.psd) {
        const Eigen::MatrixXd& X = it_.X[k];
        const Eigen::MatrixXd& Sinv = Sinv_[k];
        const int dim = b.dim;
        if (!b.factor_owner.empty()) {
          // <G_a, X G_c Sinv> = sum over factor pairs (r of a, s of c) of
          // l_r l_s (w_r' X w_s)(w_s' Sinv w_r).
          const Eigen::MatrixXd& W = b.factors;
          const Eigen::MatrixXd WX = W.transpose() * X * W;
          const Eigen::MatrixXd WS = W.transpose() * Sinv * W;
          const Eigen::MatrixXd H =
              b.factor_scale.asDiagonal() * WX.cwiseProduct(WS) * b.factor_scale.asDiagonal();
          Mb.setZero(nv, nv);
          const auto nf = static_cast<Eigen::Index>(b.factor_owner.size());
          for (Eigen::Index s = 0; s < nf; ++s) {
            const int c = b.factor_owner[static_cast<std::size_t>(s)];
            for (Eigen::Index r = 0; r < nf; ++r) {
              Mb(b.factor_owner[static_cast<std::size_t>(r)], c) += H(r, s);
            }
          }
          for (int a = 0; a < nv; ++a) {
            for (int c = 0; c < nv; ++c) M_(b.vars[a], b.vars[c]) += Mb(a, c);
          }
          continue;
        }
        Eigen::MatrixXd T(dim * dim, nv);
        Eigen::MatrixXd XG(dim, dim);
        for (int j = 0; j < nv; ++j) {
          Eigen::Map<Eigen::MatrixXd> Tj(T.col(j).data(), dim, dim);
          const auto& ent = b.entries[static_cast<std::size_t>(j)];
          if (static_cast<int>(ent.size()) * 2 <= dim) {
            Tj.setZero();
            for (const auto& e : ent) {
              Tj.noalias() += e.value() * X.col(e.row()) * Sinv.row(e.col());
            }
          } else {
            XG.setZero();
            for (const auto& e : ent) XG.col(e.col()) += e.value() * X.col(e.row());
            Tj.noalias() = XG * Sinv;
          }
        }
        Mb = b.G.transpose() * T;
      } else {
        const Eigen::VectorXd d = it_.x[k].cwiseQuotient(it_.s[k]);
        const SparseMatrix DG = d.asDiagonal() * b.G;
        Mb = Eigen::MatrixXd(SparseMatrix(b.G.transpose() * DG));
      }
      for (int a = 0; a < nv; ++a) {
        for (int c = 0; c < nv; ++c) M_(b.vars[a], b.vars[c]) += Mb(a, c);
      }
    }
    M_ = 0.5 * (M_ + M_.transpose()).eval();
  }

  // Scalars that only occur in nonnegative blocks, at most one per row, have
  // a diagonal Schur block and are eliminated before factorization.
  void FindDiagonalVariables() {
    std::vector<bool> in_psd(static_cast<std::size_t>(n_), false);
    for (const auto& b : blocks_) {
      if (b.psd)
        for (int v : b.vars) in_psd[static_cast<std::size_t>(v)] = true;
    }
    std::vector<bool> candidate(static_cast<std::size_t>(n_));
    for (int v = 0; v < n_; ++v)
      candidate[static_cast<std::size_t>(v)] = !in_psd[static_cast<std::size_t>(v)];
    for (const auto& b : blocks_) {
      if (b.psd) continue;
      // Greedy claim: a candidate keeps its status only if none of its rows
      // is already owned by another candidate.
      std::vector<int> owner(static_cast<std::size_t>(b.dim), -1);
      for (int j = 0; j < b.G.outerSize(); ++j) {
        const int v = b.vars[static_cast<std::size_t>(j)];
        if (!candidate[static_cast<std::size_t>(v)]) continue;
        bool clash = false;
        for (SparseMatrix::InnerIterator it(b.G, j); it; ++it) {
          const int o = owner[static_cast<std::size_t>(it.row())];
          clash = clash || (o != -1 && o != v);
        }
        if (clash) {
          candidate[static_cast<std::size_t>(v)] = false;
          continue;
        }
        for (SparseMatrix::InnerIterator it(b.G, j); it; ++it) {
          owner[static_cast<std::size_t>(it.row())] = v;
        }
      }
    }
    diag_.clear();
    rest_.clear();
    for (int v = 0; v < n_; ++v) {
      (candidate[static_cast<std::size_t>(v)] ? diag_ : rest_).push_back(v);
    }
  }

  bool FactorDense(const Eigen::MatrixXd& M) {
    llt_.compute(M);
    if (llt_.info() == Eigen::Success) return true;
    double ridge = 1e-14 * std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 8; ++attempt, ridge *= 100.0) {
      Eigen::MatrixXd Mr = M;
      Mr.diagonal().array() += ridge;
      llt_.compute(Mr);
      if (llt_.info() == Eigen::Success) return true;
    }
    return false;
  }

  bool Factor() {
    if (diag_.empty()) return FactorDense(M_);
    const auto nd = static_cast<Eigen::Index>(diag_.size());
    const auto nr = static_cast<Eigen::Index>(rest_.size());
    dinv_.resize(nd);
    for (Eigen::Index a = 0; a < nd; ++a) {
      const double v = M_(diag_[a], diag_[a]);
      if (!(v > 0.0)) return false;
      dinv_(a) = 1.0 / v;
    }
    coupling_.resize(nr, nd);  // M_rd
    for (Eigen::Index a = 0; a < nr; ++a) {
      for (Eigen::Index c = 0; c < nd; ++c) coupling_(a, c) = M_(rest_[a], diag_[c]);
    }
    Eigen::MatrixXd reduced(nr, nr);
    for (Eigen::Index a = 0; a < nr; ++a) {
      for (Eigen::Index c = 0; c < nr; ++c) reduced(a, c) = M_(rest_[a], rest_[c]);
    }
    reduced.noalias() -= coupling_ * dinv_.asDiagonal() * coupling_.transpose();
    if (nr == 0) return true;
    return FactorDense(0.5 * (reduced + reduced.transpose()));
  }

  Eigen::VectorXd SolveSchur(const Eigen::VectorXd& rhs) const {
    if (diag_.empty()) return llt_.solve(rhs);
    const Eigen::VectorXd rd = Gather(rhs, diag_);
    const Eigen::VectorXd rr = Gather(rhs, rest_);
    Eigen::VectorXd xr;
    if (!rest_.empty()) {
      xr = llt_.solve(rr - coupling_ * dinv_.cwiseProduct(rd));
    } else {
      xr.resize(0);
    }
    const Eigen::VectorXd xd = dinv_.cwiseProduct(rd - coupling_.transpose() * xr);
    Eigen::VectorXd x(n_);
    for (std::size_t a = 0; a < diag_.size(); ++a) x(diag_[a]) = xd(static_cast<Eigen::Index>(a));
    for (std::size_t a = 0; a < rest_.size(); ++a) x(rest_[a]) = xr(static_cast<Eigen::Index>(a));
    return x;
  }

  struct Direction {
    Eigen::VectorXd dy;
    std::vector<Eigen::MatrixXd> dX, dS;
    std::vector<Eigen::VectorXd> dx, ds;
  };

  // Solves for the direction targeting sigma*mu; corr (if given) supplies the
  // second-order Mehrotra term.
  Direction SolveDirection(double sigma_mu, const Direction* corr) const {
    const std::size_t nb = blocks_.size();
    std::vector<Eigen::MatrixXd> Q(nb);
    std::vector<Eigen::VectorXd> q(nb);
    Eigen::VectorXd rhs = -rd_;
    for (std::size_t k = 0; k < nb; ++k) {
      const Block& b = blocks_[k];
      Eigen::VectorXd gq;
      if (b.psd) {
        Q[k] = sigma_mu * Sinv_[k] - it_.X[k];
        if (corr != nullptr) Q[k] -= corr->dX[k] * corr->dS[k] * Sinv_[k];
        const Eigen::MatrixXd R = Q[k] - it_.X[k] * Rp_[k] * Sinv_[k];
        const Eigen::Map<const Eigen::VectorXd> rv(R.data(), R.size());
        gq = b.G.transpose() * rv;
      } else {
        const Eigen::VectorXd sinv = it_.s[k].cwiseInverse();
        q[k] = sigma_mu * sinv - it_.x[k];
        if (corr != nullptr) {
          q[k] -= corr->dx[k].cwiseProduct(corr->ds[k]).cwiseProduct(sinv);
        }
        gq = b.G.transpose() * (q[k] - it_.x[k].cwiseProduct(rp_[k]).cwiseProduct(sinv)).eval();
      }
      for (std::size_t j = 0; j < b.vars.size(); ++j) rhs(b.vars[j]) += gq(j);
    }
    Direction d;
    d.dy = SolveSchur(rhs);
    d.dX.resize(nb);
    d.dS.resize(nb);
    d.dx.resize(nb);
    d.ds.resize(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      const Block& b = blocks_[k];
      const Eigen::VectorXd gdy = b.G * Gather(d.dy, b.vars);
      if (b.psd) {
        d.dS[k] = Rp_[k] + Unvec(gdy, b.dim);
        d.dS[k] = 0.5 * (d.dS[k] + d.dS[k].transpose()).eval();
        Eigen::MatrixXd dX = Q[k] - it_.X[k] * d.dS[k] * Sinv_[k];
        d.dX[k] = 0.5 * (dX + dX.transpose());
      } else {
        d.ds[k] = rp_[k] + gdy;
        d.dx[k] = q[k] - it_.x[k].cwiseProduct(d.ds[k]).cwiseQuotient(it_.s[k]);
      }
    }
    return d;
  }

  void StepLengths(const Direction& d, double* ap, double* ad) const {
    double a_p = kInf, a_d = kInf;
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      if (blocks_[k].psd) {
        a_p = std::min(a_p, MaxStepPsd(it_.X[k], d.dX[k]));
        a_d = std::min(a_d, MaxStepPsd(it_.S[k], d.dS[k]));
      } else {
        a_p = std::min(a_p, MaxStepNonneg(it_.x[k], d.dx[k]));
        a_d = std::min(a_d, MaxStepNonneg(it_.s[k], d.ds[k]));
      }
    }
    *ap = a_p;
    *ad = a_d;
  }

  double GapAfter(const Direction& d, double ap, double ad) const {
    double g = 0.0;
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      if (blocks_[k].psd) {
        g += Inner(it_.X[k] + ap * d.dX[k], it_.S[k] + ad * d.dS[k]);
      } else {
        g += (it_.x[k] + ap * d.dx[k]).dot(it_.s[k] + ad * d.ds[k]);
      }
    }
    return g / total_dim_;
  }

  bool Step(double* alpha_p, double* alpha_d) {
    BuildSchur();
    if (!M_.allFinite() || !Factor()) return false;

    const Direction pred = SolveDirection(0.0, nullptr);
    if (!pred.dy.allFinite()) return false;
    double ap = 0.0, ad = 0.0;
    StepLengths(pred, &ap, &ad);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    const double mu_aff = GapAfter(pred, ap, ad);
    double sigma = std::pow(std::max(0.0, mu_aff) / mu_, 3.0);
    sigma = std::clamp(sigma, 0.0, 1.0);

    const Direction d = SolveDirection(sigma * mu_, &pred);
    if (!d.dy.allFinite()) return false;
    StepLengths(d, &ap, &ad);
    const double tau = options_.step_fraction;
    ap = std::min(1.0, tau * ap);
    ad = std::min(1.0, tau * ad);

    it_.y += ad * d.dy;
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      if (blocks_[k].psd) {
        it_.X[k] += ap * d.dX[k];
        it_.S[k] += ad * d.dS[k];
        it_.X[k] = 0.5 * (it_.X[k] + it_.X[k].transpose()).eval();
        it_.S[k] = 0.5 * (it_.S[k] + it_.S[k].transpose()).eval();
      } else {
        it_.x[k] += ap * d.dx[k];
        it_.s[k] += ad * d.ds[k];
      }
    }
    *alpha_p = ap;
    *alpha_d = ad;
    return true;
  }

  InteriorPointOptions options_;
  int n_;
  Eigen::VectorXd c_;
  std::vector<Block> blocks_;
  double total_dim_ = 0.0;
  double g0_norm_sq_ = 0.0;

  Iterate it_;
  std::vector<Eigen::MatrixXd> Sinv_, Rp_;
  std::vector<Eigen::VectorXd> rp_;
  Eigen::VectorXd rd_;
  double mu_ = 0.0, gap_abs_ = 0.0, dual_obj_ = 0.0;
  double primal_res_ = 0.0, dual_res_ = 0.0;
  Eigen::MatrixXd M_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  std::vector<int> diag_, rest_;
  Eigen::VectorXd dinv_;
  Eigen::MatrixXd coupling_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Problem construction

bool AffineConstraint::operator==(const AffineConstraint& o) const {
  return name == o.name && cone == o.cone && dim == o.dim && constant.rows() == o.constant.rows() &&
         constant.cols() == o.constant.cols() && constant == o.constant &&
         variables == o.variables && coefficients == o.coefficients;
}

Eigen::MatrixXd Assignment::operator[](int block) const { return problem_.Value(block, y_); }

int SdpProblem::AddSymmetric(std::string name, int n) {
  if (n < 1) throw DimensionError("symmetric variable must have n >= 1");
  VariableBlock v{std::move(name), VariableKind::kSymmetric, n, n, num_scalars_};
  num_scalars_ += v.Size();
  variables_.push_back(std::move(v));
  objective_.conservativeResize(num_scalars_);
  objective_.tail(variables_.back().Size()).setZero();
  return static_cast<int>(variables_.size()) - 1;
}

int SdpProblem::AddMatrix(std::string name, int rows, int cols) {
  if (rows < 1 || cols < 1) throw DimensionError("matrix variable must be nonempty");
  VariableBlock v{std::move(name), VariableKind::kRectangular, rows, cols, num_scalars_};
  num_scalars_ += v.Size();
  variables_.push_back(std::move(v));
  objective_.conservativeResize(num_scalars_);
  objective_.tail(variables_.back().Size()).setZero();
  return static_cast<int>(variables_.size()) - 1;
}

int SdpProblem::ScalarIndex(int block, int row, int col) const {
  const VariableBlock& v = variables_.at(static_cast<std::size_t>(block));
  if (row < 0 || col < 0 || row >= v.rows || col >= v.cols) {
    throw DimensionError("scalar index out of range for variable " + v.name);
  }
  if (v.kind == VariableKind::kSymmetric) {
    if (row > col) std::swap(row, col);
    return v.offset + col * (col + 1) / 2 + row;
  }
  return v.offset + row * v.cols + col;
}

Eigen::MatrixXd SdpProblem::Value(int block, const Eigen::VectorXd& y) const {
  const VariableBlock& v = variables_.at(static_cast<std::size_t>(block));
  if (y.size() != num_scalars_) throw DimensionError("assignment has wrong length");
  Eigen::MatrixXd M(v.rows, v.cols);
  if (v.kind == VariableKind::kSymmetric) {
    int k = v.offset;
    for (int c = 0; c < v.cols; ++c) {
      for (int r = 0; r <= c; ++r, ++k) {
        M(r, c) = y(k);
        M(c, r) = y(k);
      }
    }
  } else {
    for (int r = 0; r < v.rows; ++r) {
      for (int c = 0; c < v.cols; ++c) M(r, c) = y(v.offset + r * v.cols + c);
    }
  }
  return M;
}

AffineConstraint SdpProblem::Compile(std::string name, ConeKind cone, int dim,
                                     const MatrixMap& map) const {
  const bool psd = cone == ConeKind::kPsd;
  const Eigen::Index cols = psd ? dim : 1;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(num_scalars_);
  const Assignment a(*this, y);

  AffineConstraint con;
  con.name = std::move(name);
  con.cone = cone;
  con.dim = dim;
  con.constant = map(a);
  if (con.constant.rows() != dim || con.constant.cols() != cols) {
    throw DimensionError("constraint '" + con.name + "' map returned the wrong shape");
  }
  const double scale = 1.0 + con.constant.cwiseAbs().maxCoeff();
  if (psd && (con.constant - con.constant.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DimensionError("constraint '" + con.name + "' is not symmetric");
  }
  for (int s = 0; s < num_scalars_; ++s) {
    y(s) = 1.0;
    const Eigen::MatrixXd G = map(a) - con.constant;
    y(s) = 0.0;
    std::vector<SymmetricEntry> entries;
    if (psd) {
      for (int c = 0; c < dim; ++c) {
        for (int r = 0; r <= c; ++r) {
          const double v = G(r, c);
          if (std::abs(v - G(c, r)) > 1e-12 * (scale + std::abs(v))) {
            throw DimensionError("constraint '" + con.name + "' is not symmetric");
          }
          if (v != 0.0) entries.push_back({r, c, v});
        }
      }
    } else {
      for (int r = 0; r < dim; ++r) {
        if (G(r, 0) != 0.0) entries.push_back({r, r, G(r, 0)});
      }
    }
    if (!entries.empty()) {
      con.variables.push_back(s);
      con.coefficients.push_back(std::move(entries));
    }
  }
  return con;
}

void SdpProblem::AddPsdConstraint(std::string name, int dim, const MatrixMap& map) {
  if (dim < 1) throw DimensionError("PSD constraint must have dim >= 1");
  constraints_.push_back(Compile(std::move(name), ConeKind::kPsd, dim, map));
}

void SdpProblem::AddNonnegative(std::string name, int dim, const VectorMap& map) {
  if (dim < 1) throw DimensionError("nonnegativity constraint must have dim >= 1");
  constraints_.push_back(Compile(std::move(name), ConeKind::kNonnegative, dim,
                                 [&map](const Assignment& a) { return Eigen::MatrixXd(map(a)); }));
}

void SdpProblem::SetObjective(int scalar, double coefficient) {
  if (scalar < 0 || scalar >= num_scalars_) throw DimensionError("objective index out of range");
  objective_(scalar) = coefficient;
}

void SdpProblem::SetObjective(int block, const Eigen::MatrixXd& coefficients) {
  const VariableBlock& v = variables_.at(static_cast<std::size_t>(block));
  if (coefficients.rows() != v.rows || coefficients.cols() != v.cols) {
    throw DimensionError("objective coefficients have the wrong shape");
  }
  for (int r = 0; r < v.rows; ++r) {
    for (int c = 0; c < v.cols; ++c) {
      if (v.kind == VariableKind::kSymmetric && r > c) continue;
      objective_(ScalarIndex(block, r, c)) = coefficients(r, c);
    }
  }
}

Eigen::MatrixXd SdpProblem::Evaluate(int constraint, const Eigen::VectorXd& y) const {
  const AffineConstraint& con = constraints_.at(static_cast<std::size_t>(constraint));
  if (y.size() != num_scalars_) throw DimensionError("assignment has wrong length");
  Eigen::MatrixXd G = con.constant;
  for (std::size_t j = 0; j < con.variables.size(); ++j) {
    const double yj = y(con.variables[j]);
    for (const auto& e : con.coefficients[j]) {
      if (con.cone == ConeKind::kNonnegative) {
        G(e.row, 0) += yj * e.value;
      } else {
        G(e.row, e.col) += yj * e.value;
        if (e.row != e.col) G(e.col, e.row) += yj * e.value;
      }
    }
  }
  return G;
}

bool SdpProblem::operator==(const SdpProblem& other) const {
  return num_scalars_ == other.num_scalars_ && variables_ == other.variables_ &&
         constraints_ == other.constraints_ && objective_ == other.objective_;
}

const char* ToString(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kInfeasible:
      return "infeasible";
    case SolveStatus::kMaxIterations:
      return "max_iterations";
    case SolveStatus::kNumericalProblems:
      return "numerical_problems";
  }
  return "unknown";
}

bool IsUsable(const SolveResult& result, double loose_tolerance) {
  if (result.status == SolveStatus::kOptimal) return true;
  if (result.status == SolveStatus::kInfeasible) return false;
  return result.primal_residual <= loose_tolerance && result.dual_residual <= loose_tolerance &&
         result.gap <= loose_tolerance;
}

SolveResult InteriorPointSolver::Solve(const SdpProblem& problem) const {
  if (problem.NumScalars() == 0) throw Error("SDP has no decision variables");
  Solver solver(problem, options_);
  return solver.Run();
}

std::shared_ptr<const SdpBackend> DefaultBackend() {
  static const auto backend = std::make_shared<const InteriorPointSolver>();
  return backend;
}

}  // namespace hinfsparse::sdp
