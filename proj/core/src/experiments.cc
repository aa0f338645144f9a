#include "hinfsparse/experiments.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "hinfsparse/errors.h"

namespace hinfsparse {
namespace {

using Eigen::MatrixXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

MatrixXd Gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd M(rows, cols);
  // Row-major fill so the stream order does not depend on Eigen's storage.
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) M(i, j) = normal(rng);
  }
  return M;
}

double RelativeLoss(double value, double baseline) {
  if (!std::isfinite(value)) return kInf;
  return 100.0 * (value - baseline) / baseline;
}

}  // namespace

void DenseGaussianConfig::Validate() const {
  if (n < 1 || m < 1) throw Error("dense gaussian plant needs n, m >= 1");
}

void SpatialDecayConfig::Validate() const {
  if (n < 1) throw Error("spatial plant needs n >= 1");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw Error("alpha and beta must be > 0");
  if (!(r >= 0.0)) throw Error("connectivity radius must be >= 0");
  if (!std::isfinite(bv_scale)) throw Error("bv_scale must be finite");
}

void PerturbationStudyConfig::Validate() const {
  if (!(magnitude >= 0.0)) throw Error("perturbation magnitude must be >= 0");
  if (samples < 1) throw Error("perturbation study needs at least one sample");
}

StateSpaceSystem GenDenseGaussian(const DenseGaussianConfig& cfg) {
  cfg.Validate();
  std::mt19937_64 rng(cfg.seed);
  StateSpaceSystem sys;
  sys.A = Gaussian(cfg.n, cfg.n, rng);
  sys.B = Gaussian(cfg.n, cfg.m, rng);
  sys.C = MatrixXd::Identity(cfg.n, cfg.n);
  sys.Dgu = MatrixXd::Identity(cfg.n, cfg.m);
  sys.Bv = sys.B;
  sys.Dgv = MatrixXd::Identity(cfg.n, cfg.m);
  return sys;
}

StateSpaceSystem GenSpatialDecay(const SpatialDecayConfig& cfg, Eigen::MatrixX2d* positions) {
  cfg.Validate();
  const int n = cfg.n;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixX2d p(n, 2);
  for (int i = 0; i < n; ++i) {
    p(i, 0) = unit(rng);
    p(i, 1) = unit(rng);
  }
  const MatrixXd c = Gaussian(n, n, rng);
  StateSpaceSystem sys;
  sys.A = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d = (p.row(i) - p.row(j)).norm();
      if (d <= cfg.r) sys.A(i, j) = c(i, j) * std::exp(-cfg.alpha * std::pow(d, cfg.beta));
    }
  }
  sys.B = MatrixXd::Identity(n, n);
  sys.C = MatrixXd::Identity(n, n);
  sys.Dgu = MatrixXd::Identity(n, n);
  sys.Dgv = MatrixXd::Identity(n, n);
  sys.Bv = cfg.bv_scale * sys.B;
  if (positions != nullptr) *positions = p;
  return sys;
}

DesignMetrics ComputeMetrics(const FeedbackGain& F, const FeedbackGain& F_o, double hinf_center,
                             const StateSpaceSystem& sys) {
  if (F.rows() != F_o.rows() || F.cols() != F_o.cols()) {
    throw DimensionError("sparse gain and center gain differ in shape");
  }
  DesignMetrics d;
  d.nnz_sparse = F.Nonzeros();
  d.nnz_center = F_o.Nonzeros();
  d.sigma_d = d.nnz_center > 0 ? 100.0 * d.nnz_sparse / d.nnz_center : 100.0;
  d.hinf_center = hinf_center;
  d.hinf_sparse = HinfNorm(CloseLoop(sys, F)).value;
  d.stable = std::isfinite(d.hinf_sparse);
  d.sigma_p = RelativeLoss(d.hinf_sparse, hinf_center);
  return d;
}

DesignMetrics ComputeMetrics(const FeedbackGain& F, const EllipsoidRegion& region,
                             const StateSpaceSystem& sys) {
  const FeedbackGain F_o{region.F_o};
  return ComputeMetrics(F, F_o, HinfNorm(CloseLoop(sys, F_o)).value, sys);
}

bool GammaFeasible(const StateSpaceSystem& sys, double gamma, const SynthesisOptions& opts,
                   const sdp::SdpBackend& backend) {
  try {
    SynthesizeRegion(sys, gamma, opts, backend);
    return true;
  } catch (const InfeasibleError&) {
    return false;
  } catch (const VerificationFailed&) {
    return false;
  } catch (const DegenerateRegion&) {
    return false;
  }
}

double GammaFloor(const StateSpaceSystem& sys, const GammaFloorOptions& opts,
                  const sdp::SdpBackend& backend) {
  if (!(opts.rel_tol > 0.0)) throw Error("gamma floor tolerance must be > 0");
  auto feasible = [&](double g) {
    const bool ok = GammaFeasible(sys, g, opts.synthesis, backend);
    spdlog::debug("gamma floor probe {} -> {}", g, ok ? "feasible" : "infeasible");
    return ok;
  };
  double hi = 1.0;
  double lo = 0.0;
  if (feasible(hi)) {
    lo = hi / 2.0;
    while (feasible(lo)) {
      hi = lo;
      lo /= 2.0;
      if (hi < 1e-8) return hi;
    }
  } else {
    lo = hi;
    hi *= 2.0;
    while (!feasible(hi)) {
      lo = hi;
      hi *= 2.0;
      if (hi > opts.cap) {
        throw InfeasibleError("no feasible gamma below " + std::to_string(opts.cap), "infeasible",
                              -kInf);
      }
    }
  }
  while (hi / lo > 1.0 + opts.rel_tol) {
    const double mid = std::sqrt(hi * lo);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

std::string MethodName(Method method) { return method == Method::kL1 ? "l1" : "greedy"; }

Method ParseMethod(const std::string& name) {
  if (name == "l1") return Method::kL1;
  if (name == "greedy") return Method::kGreedy;
  throw Error("unknown sparsification method '" + name + "'");
}

FeedbackGain Sparsify(const EllipsoidRegion& region, Method method, double theta,
                      const SweepConfig& cfg, const sdp::SdpBackend& backend) {
  if (method == Method::kL1) {
    ReweightConfig c = cfg.l1;
    c.theta = theta;
    return ReweightedL1(region, c, backend).gain;
  }
  if (theta == 0.0) return FeedbackGain{region.F_o};
  GreedyConfig c = cfg.greedy;
  c.theta = theta;
  return RunGreedy(region, c).gain;
}

std::vector<SweepRow> ThetaSweep(const StateSpaceSystem& sys, const EllipsoidRegion& region,
                                 double center_hinf, std::uint64_t seed, const SweepConfig& cfg,
                                 const sdp::SdpBackend& backend) {
  std::vector<SweepRow> rows;
  for (double theta : cfg.thetas) {
    for (Method method : cfg.methods) {
      SweepRow row;
      row.theta = theta;
      row.method = method;
      row.seed = seed;
      rows.push_back(row);
    }
  }
  const FeedbackGain F_o{region.F_o};
  auto run_cell = [&](SweepRow& row) {
    try {
      row.gain = Sparsify(region, row.method, row.theta, cfg, backend);
      row.metrics = ComputeMetrics(row.gain, F_o, center_hinf, sys);
      row.verified = row.metrics.hinf_sparse <= region.gamma * (1.0 + 1e-6);
      if (!row.verified) row.failure = "H-infinity bound not met";
    } catch (const Error& e) {
      row.failure = e.what();
      row.metrics.sigma_d = row.metrics.sigma_p = std::numeric_limits<double>::quiet_NaN();
      spdlog::warn("sweep cell theta={} method={} failed: {}", row.theta, MethodName(row.method),
                   e.what());
    }
  };

  const int threads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(rows.size())));
  if (threads == 1) {
    for (SweepRow& row : rows) run_cell(row);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < rows.size(); k = next++) run_cell(rows[k]);
    });
  }
  pool.clear();  // joins
  return rows;
}

std::vector<SweepRow> ThetaSweep(const StateSpaceSystem& sys, double gamma, std::uint64_t seed,
                                 const SweepConfig& cfg, const SynthesisOptions& synthesis,
                                 const sdp::SdpBackend& backend) {
  const SynthesisResult s = SynthesizeRegion(sys, gamma, synthesis, backend);
  return ThetaSweep(sys, s.region, s.center_hinf.value, seed, cfg, backend);
}

std::vector<double> PerturbationStudy(const StateSpaceSystem& sys, const FeedbackGain& F_s,
                                      const PerturbationStudyConfig& cfg) {
  cfg.Validate();
  const double base = HinfNorm(CloseLoop(sys, F_s)).value;
  if (!std::isfinite(base)) throw Error("perturbation study needs a stabilizing gain");
  std::vector<std::pair<int, int>> support;
  for (int i = 0; i < F_s.rows(); ++i) {
    for (int j = 0; j < F_s.cols(); ++j) {
      if (F_s.F(i, j) != 0.0) support.emplace_back(i, j);
    }
  }
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out;
  out.reserve(cfg.samples);
  FeedbackGain F;
  for (int s = 0; s < cfg.samples; ++s) {
    F.F = F_s.F;
    for (const auto& [i, j] : support) F.F(i, j) += cfg.magnitude * normal(rng);
    out.push_back(RelativeLoss(HinfNorm(CloseLoop(sys, F)).value, base));
  }
  return out;
}

double EmpiricalQuantile(std::vector<double> samples, double q) {
  if (samples.empty()) throw Error("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw Error("quantile level must lie in [0, 1]");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(q * n)));
  return samples[rank - 1];
}

}  // namespace hinfsparse
