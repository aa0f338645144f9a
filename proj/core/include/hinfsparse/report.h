#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hinfsparse/experiments.h"
#include "hinfsparse/io.h"

namespace hinfsparse::report {

/// Shortest round-trip decimal form; "inf", "-inf" and "nan" for non-finite
/// values.
std::string FormatDouble(double x);

/// Header theta,method,seed,sigma_d,sigma_p,hinf; one line per row in order.
std::string SweepCsv(const std::vector<SweepRow>& rows);

/// JSON form of a sweep. Non-finite σ values become null with "stable": false.
io::Json SweepJson(const std::vector<SweepRow>& rows);

io::Json MetricsJson(const DesignMetrics& m);

/// Mean σ_d and σ_p over seeds for one (θ, method) cell. Failed rows are
/// counted in `failed` and excluded from the means.
struct SweepSummary {
  double theta = 0.0;
  Method method = Method::kL1;
  double mean_sigma_d = 0.0;
  double mean_sigma_p = 0.0;
  int count = 0;
  int failed = 0;
};

/// Ordered by θ, then method as first seen.
std::vector<SweepSummary> Summarize(const std::vector<SweepRow>& rows);

std::string SummaryCsv(const std::vector<SweepSummary>& summary);

/// Header label,sample,sigma_p.
std::string PerturbationCsv(const std::vector<std::string>& labels,
                            const std::vector<std::vector<double>>& samples);

/// Directed plant couplings i,j,weight for the nonzero off-diagonal A_ij.
std::string PlantEdgesCsv(const Eigen::MatrixXd& A);

/// Controller support i,j,value for the nonzero F_ij.
std::string GainSupportCsv(const FeedbackGain& F);

}  // namespace hinfsparse::report
