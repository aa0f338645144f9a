#include "hinfsparse/lti.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "hinfsparse/errors.h"
#include "hinfsparse/linalg.h"

namespace hinfsparse {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void RequireShape(const Eigen::MatrixXd& M, Eigen::Index rows, Eigen::Index cols,
                  const char* name) {
  if (M.rows() != rows || M.cols() != cols) {
    throw DimensionError(std::string(name) + " has shape " + std::to_string(M.rows()) + "x" +
                         std::to_string(M.cols()) + ", expected " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
}

Eigen::VectorXcd Spectrum(const Eigen::Ref<const Eigen::MatrixXd>& M) {
  if (M.rows() != M.cols()) throw DimensionError("spectrum of a non-square matrix");
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
  if (es.info() != Eigen::Success) {
    throw NumericalError("nonsymmetric eigen-solver did not converge");
  }
  return es.eigenvalues();
}

// Frequency-response evaluator that keeps its complex workspace between calls.
class FrequencyResponse {
 public:
  explicit FrequencyResponse(const ClosedLoopSystem& cl)
      : cl_(cl),
        A_(cl.Acl.cast<std::complex<double>>()),
        B_(cl.Bcl.cast<std::complex<double>>()),
        C_(cl.Ccl.cast<std::complex<double>>()),
        D_(cl.Dcl.cast<std::complex<double>>()),
        n_(cl.Acl.rows()) {}

  // +infinity when jωI − A is numerically singular.
  double SigmaMax(double omega) {
    if (D_.size() == 0) return 0.0;
    Eigen::MatrixXcd G = D_;
    if (n_ > 0) {
      Eigen::MatrixXcd M = -A_;
      M.diagonal().array() += std::complex<double>(0.0, omega);
      Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
      if (!(lu.rcond() > 1e-14)) return kInf;
      G.noalias() += C_ * lu.solve(B_);
    }
    if (G.rows() == 1 || G.cols() == 1) return G.norm();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(G);
    return svd.singularValues()(0);
  }

 private:
  const ClosedLoopSystem& cl_;
  Eigen::MatrixXcd A_, B_, C_, D_;
  Eigen::Index n_;
};

// Hamiltonian whose imaginary-axis eigenvalues mark the frequencies where
// σ_max(G(jω)) = gamma. Requires gamma > σ_max(D).
Eigen::MatrixXd Hamiltonian(const ClosedLoopSystem& cl, double gamma) {
  const Eigen::MatrixXd& A = cl.Acl;
  const Eigen::MatrixXd& B = cl.Bcl;
  const Eigen::MatrixXd& C = cl.Ccl;
  const Eigen::MatrixXd& D = cl.Dcl;
  const Eigen::Index n = A.rows();
  const Eigen::Index mv = B.cols();
  const Eigen::Index p = C.rows();
  Eigen::MatrixXd R = gamma * gamma * Eigen::MatrixXd::Identity(mv, mv) - D.transpose() * D;
  Eigen::LLT<Eigen::MatrixXd> llt(R);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("Hamiltonian test level below sigma_max(D)");
  }
  const Eigen::MatrixXd RinvDtC = llt.solve(D.transpose() * C);
  const Eigen::MatrixXd RinvBt = llt.solve(B.transpose());
  const Eigen::MatrixXd Ah = A + B * RinvDtC;
  Eigen::MatrixXd H(2 * n, 2 * n);
  H.topLeftCorner(n, n) = Ah;
  H.topRightCorner(n, n) = B * RinvBt;
  H.bottomLeftCorner(n, n) =
      -C.transpose() * (Eigen::MatrixXd::Identity(p, p) + D * llt.solve(D.transpose())) * C;
  H.bottomRightCorner(n, n) = -Ah.transpose();
  return H;
}

// Nonnegative frequencies of the (numerically) imaginary eigenvalues of H.
std::vector<double> ImaginaryAxisFrequencies(const Eigen::MatrixXd& H) {
  const Eigen::VectorXcd w = Spectrum(H);
  const double scale = 1.0 + H.lpNorm<Eigen::Infinity>();
  std::vector<double> freqs;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    const double re = w(k).real();
    const double im = std::abs(w(k).imag());
    if (std::abs(re) <= 1e-6 * std::max(scale, std::abs(w(k)))) {
      freqs.push_back(im);
    }
  }
  std::sort(freqs.begin(), freqs.end());
  freqs.erase(std::unique(freqs.begin(), freqs.end()), freqs.end());
  return freqs;
}

}  // namespace

void StateSpaceSystem::Validate() const {
  if (A.rows() != A.cols()) throw DimensionError("A must be square");
  const Eigen::Index n = A.rows();
  if (B.rows() != n) throw DimensionError("B must have n rows");
  if (Bv.rows() != n) throw DimensionError("Bv must have n rows");
  if (C.cols() != n) throw DimensionError("C must have n columns");
  RequireShape(Dgu, C.rows(), B.cols(), "Dgu");
  RequireShape(Dgv, C.rows(), Bv.cols(), "Dgv");
  for (const auto* M : {&A, &B, &Bv, &C, &Dgu, &Dgv}) {
    if (!M->allFinite()) throw Error("plant matrices must be finite");
  }
}

int FeedbackGain::Nonzeros() const { return linalg::CountNonzeros(F); }

ClosedLoopSystem CloseLoop(const StateSpaceSystem& sys, const FeedbackGain& gain) {
  sys.Validate();
  RequireShape(gain.F, sys.m(), sys.n(), "F");
  if (!gain.F.allFinite()) throw Error("feedback gain must be finite");
  ClosedLoopSystem cl;
  cl.Acl = sys.A + sys.B * gain.F;
  cl.Bcl = sys.Bv;
  cl.Ccl = sys.C + sys.Dgu * gain.F;
  cl.Dcl = sys.Dgv;
  return cl;
}

double SpectralAbscissa(const Eigen::Ref<const Eigen::MatrixXd>& M) {
  if (M.size() == 0) return -kInf;
  return Spectrum(M).real().maxCoeff();
}

bool IsHurwitz(const Eigen::Ref<const Eigen::MatrixXd>& M, double margin) {
  if (!M.allFinite()) throw Error("Hurwitz test of a non-finite matrix");
  return SpectralAbscissa(M) < -margin;
}

double SigmaMaxAt(const ClosedLoopSystem& cl, double omega) {
  return FrequencyResponse(cl).SigmaMax(omega);
}

HinfResult HinfNorm(const ClosedLoopSystem& cl, double rel_tol) {
  if (!(rel_tol > 0.0)) throw Error("rel_tol must be positive");
  HinfResult result;
  if (!IsHurwitz(cl.Acl)) {
    result.value = kInf;
    result.upper = kInf;
    result.converged = false;
    return result;
  }
  if (cl.Ccl.size() == 0 || cl.Bcl.size() == 0 || cl.Acl.size() == 0 || cl.Ccl.isZero(0.0) ||
      cl.Bcl.isZero(0.0)) {
    result.value = result.upper = linalg::SpectralNorm(cl.Dcl);
    result.converged = true;
    return result;
  }

  FrequencyResponse response(cl);
  double lower = linalg::SpectralNorm(cl.Dcl);
  double peak = kInf;  // σ_max(D) is attained as ω → ∞
  auto probe = [&](double omega) {
    const double s = response.SigmaMax(omega);
    if (s > lower) {
      lower = s;
      peak = omega;
    }
  };

  // Coarse scan: DC, the pole frequencies, and 64 log-spaced points spanning
  // the pole magnitudes.
  const Eigen::VectorXcd poles = Spectrum(cl.Acl);
  const double rho_min = std::max(poles.cwiseAbs().minCoeff(), 1e-12);
  const double rho_max = std::max(poles.cwiseAbs().maxCoeff(), rho_min);
  probe(0.0);
  for (Eigen::Index k = 0; k < poles.size(); ++k) probe(std::abs(poles(k).imag()));
  for (double w : LogGrid(1e-3 * rho_min, 1e3 * rho_max, 64)) probe(w);

  // Returns true when gamma is certified to exceed the norm; otherwise the
  // lower bound has been raised above gamma.
  auto certified_above = [&](double gamma) {
    const std::vector<double> freqs = ImaginaryAxisFrequencies(Hamiltonian(cl, gamma));
    if (freqs.empty()) return true;
    const double before = lower;
    for (std::size_t k = 0; k < freqs.size(); ++k) {
      probe(freqs[k]);
      if (k + 1 < freqs.size()) probe(0.5 * (freqs[k] + freqs[k + 1]));
    }
    if (freqs.size() == 1) probe(0.5 * freqs[0]);
    return !(lower > gamma && lower > before);
  };

  // Keeps gamma² representable in the Hamiltonian test.
  const double floor_level = std::max(lower, 1e-150);
  double upper = 2.0 * floor_level;
  int iterations = 0;
  while (!certified_above(upper)) {
    upper = 2.0 * std::max(upper, lower);
    if (++iterations > 200) throw NumericalError("H-infinity bracket did not close");
  }
  bool converged = upper <= lower * (1.0 + rel_tol);
  while (!converged && iterations < 200) {
    ++iterations;
    const double gamma = std::min(upper, lower * (1.0 + 0.5 * rel_tol));
    if (certified_above(gamma)) upper = gamma;
    converged = upper <= lower * (1.0 + rel_tol);
  }
  result.value = lower;
  result.upper = upper;
  result.converged = converged;
  result.peak_frequency = std::isfinite(peak) ? peak : 0.0;
  result.iterations = iterations;
  return result;
}

double HinfNormGrid(const ClosedLoopSystem& cl, std::span<const double> grid) {
  if (grid.empty()) throw Error("frequency grid must be nonempty");
  FrequencyResponse response(cl);
  double best = 0.0;
  int skipped = 0;
  for (double w : grid) {
    if (!(w >= 0.0)) throw Error("grid frequencies must be nonnegative");
    const double s = response.SigmaMax(w);
    if (!std::isfinite(s)) {
      ++skipped;
      continue;
    }
    best = std::max(best, s);
  }
  if (skipped > 0) {
    spdlog::warn("HinfNormGrid: skipped {} frequencies where jwI - A is singular", skipped);
  }
  return best;
}

std::vector<double> LogGrid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) {
    throw Error("LogGrid needs 0 < lo <= hi and count >= 1");
  }
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int k = 0; k < count; ++k) {
    grid[static_cast<std::size_t>(k)] = std::pow(10.0, a + (b - a) * k / (count - 1));
  }
  return grid;
}

std::vector<double> DefaultOracleGrid() { return LogGrid(1e-4, 1e4, 100000); }

}  // namespace hinfsparse
