#include "hinfsparse/report.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "hinfsparse/errors.h"

namespace hinfsparse::report {
namespace {

io::Json NullableNumber(double x) { return std::isfinite(x) ? io::Json(x) : io::Json(nullptr); }

}  // namespace

std::string FormatDouble(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string SweepCsv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "theta,method,seed,sigma_d,sigma_p,hinf\n";
  for (const SweepRow& r : rows) {
    out << FormatDouble(r.theta) << ',' << MethodName(r.method) << ',' << r.seed << ','
        << FormatDouble(r.metrics.sigma_d) << ',' << FormatDouble(r.metrics.sigma_p) << ','
        << FormatDouble(r.metrics.hinf_sparse) << '\n';
  }
  return out.str();
}

io::Json MetricsJson(const DesignMetrics& m) {
  io::Json j;
  j["sigma_d"] = NullableNumber(m.sigma_d);
  j["sigma_p"] = NullableNumber(m.sigma_p);
  j["hinf_sparse"] = NullableNumber(m.hinf_sparse);
  j["hinf_center"] = NullableNumber(m.hinf_center);
  j["nnz_sparse"] = m.nnz_sparse;
  j["nnz_center"] = m.nnz_center;
  j["stable"] = m.stable;
  return j;
}

io::Json SweepJson(const std::vector<SweepRow>& rows) {
  io::Json out = io::Json::array();
  for (const SweepRow& r : rows) {
    io::Json j;
    j["theta"] = r.theta;
    j["method"] = MethodName(r.method);
    j["seed"] = r.seed;
    j["metrics"] = MetricsJson(r.metrics);
    j["verified"] = r.verified;
    if (!r.failure.empty()) j["failure"] = r.failure;
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<SweepSummary> Summarize(const std::vector<SweepRow>& rows) {
  std::vector<SweepSummary> out;
  std::map<std::pair<double, int>, std::size_t> index;
  for (const SweepRow& r : rows) {
    const int rank = static_cast<int>(r.method);
    const auto key = std::make_pair(r.theta, rank);
    auto it = index.find(key);
    if (it == index.end()) {
      SweepSummary s;
      s.theta = r.theta;
      s.method = r.method;
      it = index.emplace(key, out.size()).first;
      out.push_back(s);
    }
    SweepSummary& s = out[it->second];
    if (!r.failure.empty() || !std::isfinite(r.metrics.sigma_p)) {
      ++s.failed;
      continue;
    }
    s.mean_sigma_d += r.metrics.sigma_d;
    s.mean_sigma_p += r.metrics.sigma_p;
    ++s.count;
  }
  for (SweepSummary& s : out) {
    if (s.count > 0) {
      s.mean_sigma_d /= s.count;
      s.mean_sigma_p /= s.count;
    } else {
      s.mean_sigma_d = s.mean_sigma_p = std::nan("");
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SweepSummary& a, const SweepSummary& b) { return a.theta < b.theta; });
  return out;
}

std::string SummaryCsv(const std::vector<SweepSummary>& summary) {
  std::ostringstream out;
  out << "theta,method,mean_sigma_d,mean_sigma_p,count,failed\n";
  for (const SweepSummary& s : summary) {
    out << FormatDouble(s.theta) << ',' << MethodName(s.method) << ','
        << FormatDouble(s.mean_sigma_d) << ',' << FormatDouble(s.mean_sigma_p) << ',' << s.count
        << ',' << s.failed << '\n';
  }
  return out.str();
}

std::string PerturbationCsv(const std::vector<std::string>& labels,
                            const std::vector<std::vector<double>>& samples) {
  if (labels.size() != samples.size()) throw Error("one label per sample set required");
  std::ostringstream out;
  out << "label,sample,sigma_p\n";
  for (std::size_t k = 0; k < labels.size(); ++k) {
    for (std::size_t s = 0; s < samples[k].size(); ++s) {
      out << labels[k] << ',' << s << ',' << FormatDouble(samples[k][s]) << '\n';
    }
  }
  return out.str();
}

std::string PlantEdgesCsv(const Eigen::MatrixXd& A) {
  std::ostringstream out;
  out << "i,j,weight\n";
  for (int i = 0; i < A.rows(); ++i) {
    for (int j = 0; j < A.cols(); ++j) {
      if (i != j && A(i, j) != 0.0) out << i << ',' << j << ',' << FormatDouble(A(i, j)) << '\n';
    }
  }
  return out.str();
}

std::string GainSupportCsv(const FeedbackGain& F) {
  std::ostringstream out;
  out << "i,j,value\n";
  for (int i = 0; i < F.rows(); ++i) {
    for (int j = 0; j < F.cols(); ++j) {
      if (F.F(i, j) != 0.0) out << i << ',' << j << ',' << FormatDouble(F.F(i, j)) << '\n';
    }
  }
  return out.str();
}

}  // namespace hinfsparse::report
