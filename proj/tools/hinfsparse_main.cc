// Command-line front end: plant generation, region synthesis, sparsification,
// θ sweeps, perturbation studies and H∞ evaluation. Reports are JSON, plot
// data is CSV.

#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hinfsparse/ellipsoid.h"
#include "hinfsparse/errors.h"
#include "hinfsparse/experiments.h"
#include "hinfsparse/io.h"
#include "hinfsparse/report.h"
#include "hinfsparse/sparsify_greedy.h"
#include "hinfsparse/sparsify_l1.h"

namespace hinfsparse {
namespace {

using io::Json;

// Reads a JSON object as CLI11 config: top-level keys set global options and
// nested objects named after a subcommand set that subcommand's options.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    Json j = Json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
      const std::string name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const std::vector<std::string> r = opt->results();
        j[name] = r.size() == 1 ? Json(r.front()) : Json(r);
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    return j.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    Json j;
    try {
      j = Json::parse(input);
    } catch (const Json::parse_error& e) {
      throw CLI::ConfigError(std::string("malformed JSON config: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConfigError("JSON config must be an object");
    std::vector<CLI::ConfigItem> items;
    Collect(j, {}, items);
    return items;
  }

 private:
  static std::string Scalar(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void Collect(const Json& obj, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        std::vector<std::string> p = parents;
        p.push_back(key);
        Collect(value, p, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const Json& v : value) item.inputs.push_back(Scalar(v));
      } else {
        item.inputs.push_back(Scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

std::vector<double> ParseList(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw Error("bad number '" + tok + "' in list");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> SplitNames(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

void Emit(const Json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    io::WriteJson(path, j);
  }
}

// Gain to --out, report to --report; without --out the report carries the
// gain and goes to stdout.
void EmitGain(const FeedbackGain& F, Json report, const std::string& out_path,
              const std::string& report_path) {
  if (!out_path.empty()) io::WriteJson(out_path, io::GainToJson(F));
  if (!report_path.empty() || out_path.empty()) {
    report["gain"] = io::GainToJson(F);
    Emit(report, report_path);
  }
}

// Accepts a bare region or a synthesis report carrying one under "region".
EllipsoidRegion LoadRegion(const std::string& path) {
  const Json j = io::ReadJson(path);
  return io::RegionFromJson(j.contains("region") ? j.at("region") : j);
}

FeedbackGain LoadGain(const std::string& path) {
  const Json j = io::ReadJson(path);
  return io::GainFromJson(j.contains("gain") ? j.at("gain") : j);
}

struct SynthesisFlags {
  std::optional<double> condition_cap;
  std::optional<double> condition_cap_limit;
  bool no_condition_cap = false;
  std::optional<double> strictness_eps;
  bool feasibility_only = false;

  void Register(CLI::App* cmd) {
    cmd->add_option("--kappa,--condition-cap", condition_cap, "Bound on cond(P) (default 100)");
    cmd->add_option("--kappa-limit", condition_cap_limit,
                    "Largest cap tried when the LMIs are infeasible (default 1e6)");
    cmd->add_flag("--no-condition-cap", no_condition_cap, "Do not bound cond(P)");
    cmd->add_option("--eps,--strictness", strictness_eps, "Margin for strict inequalities");
    cmd->add_flag("--feasibility-only", feasibility_only,
                  "Solve the fixed-margin feasibility problem instead of maximizing the margin");
  }

  SynthesisOptions Options() const {
    SynthesisOptions o;
    if (condition_cap) o.condition_cap = *condition_cap;
    if (condition_cap_limit) o.condition_cap_limit = *condition_cap_limit;
    if (!condition_cap_limit && o.condition_cap && o.condition_cap_limit < *o.condition_cap) {
      o.condition_cap_limit = *o.condition_cap;
    }
    if (no_condition_cap) o.condition_cap.reset();
    o.strictness_eps = strictness_eps;
    o.maximize_margin = !feasibility_only;
    return o;
  }
};

// γ from the flag, else 1.25 × the floor. Records the floor if computed.
double ResolveGamma(const StateSpaceSystem& sys, std::optional<double> gamma,
                    const SynthesisOptions& opts, Json* report) {
  if (gamma) return *gamma;
  GammaFloorOptions fo;
  fo.synthesis = opts;
  const double floor = GammaFloor(sys, fo);
  (*report)["gamma_floor"] = floor;
  return 1.25 * floor;
}

int Run(int argc, char** argv) {
  CLI::App app{"Sparse H-infinity state-feedback design"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file mirroring the command-line flags");
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")
      ->capture_default_str();
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "RNG seed")->envname("HINFSPARSE_SEED")->capture_default_str();

  // gen
  CLI::App* gen = app.add_subcommand("gen", "Generate a plant");
  gen->require_subcommand(1);
  std::string gen_out;
  DenseGaussianConfig gauss;
  SpatialDecayConfig spatial;
  std::string edges_out;
  CLI::App* gen_gauss = gen->add_subcommand("gaussian", "Dense Gaussian plant");
  gen_gauss->add_option("--n", gauss.n, "States")->capture_default_str();
  gen_gauss->add_option("--m", gauss.m, "Inputs")->capture_default_str();
  gen_gauss->add_option("--out", gen_out, "Output system JSON (stdout if absent)");
  CLI::App* gen_spatial = gen->add_subcommand("spatial", "Spatially decaying network");
  gen_spatial->add_option("--n", spatial.n, "Agents")->capture_default_str();
  gen_spatial->add_option("--alpha", spatial.alpha, "Bandwidth")->capture_default_str();
  gen_spatial->add_option("--beta", spatial.beta, "Decay exponent")->capture_default_str();
  gen_spatial->add_option("--r", spatial.r, "Connectivity radius")->capture_default_str();
  gen_spatial->add_option("--bv-scale", spatial.bv_scale, "Bv = scale·B")->capture_default_str();
  gen_spatial->add_option("--out", gen_out, "Output system JSON (stdout if absent)");
  gen_spatial->add_option("--edges", edges_out, "Plant coupling edge list CSV");

  // synthesize
  CLI::App* syn = app.add_subcommand("synthesize", "Synthesize the controller region");
  std::string system_path, out_path, gain_path, region_path;
  std::optional<double> gamma;
  SynthesisFlags syn_flags;
  syn->add_option("--system", system_path, "System JSON")->required();
  syn->add_option("--gamma", gamma, "Attenuation level (default 1.25 × floor)");
  std::string report_path;
  syn->add_option("--out", out_path, "Output region JSON");
  syn->add_option("--report", report_path, "Synthesis report JSON (stdout if no --out)");
  syn_flags.Register(syn);

  // sparsify-l1
  CLI::App* l1 = app.add_subcommand("sparsify-l1", "Re-weighted l1 sparsification");
  ReweightConfig l1_cfg;
  std::string l1_system;
  l1->add_option("--region", region_path, "Region or synthesis report JSON")->required();
  l1->add_option("--theta", l1_cfg.theta, "Region shrink factor")->capture_default_str();
  l1->add_option("--zeta", l1_cfg.zeta, "Weight regularizer")->capture_default_str();
  l1->add_option("--epsd,--eps-d", l1_cfg.eps_d, "Stopping tolerance")->capture_default_str();
  l1->add_option("--max-iters", l1_cfg.max_iters, "Iteration cap")->capture_default_str();
  l1->add_option("--reweight-iters", l1_cfg.reweight_iters,
                 "Leading iterations that update weights")
      ->capture_default_str();
  l1->add_option("--trunc", l1_cfg.truncation_threshold, "Truncation threshold")
      ->capture_default_str();
  l1->add_option("--system", l1_system, "System JSON for H-infinity verification");
  l1->add_option("--out", out_path, "Output gain JSON");
  l1->add_option("--report", report_path, "Run report JSON (stdout if no --out)");

  // sparsify-greedy
  CLI::App* gr = app.add_subcommand("sparsify-greedy", "Greedy sparsification");
  GreedyConfig gr_cfg;
  std::string criterion = "maxeig";
  std::optional<int> budget;
  std::string gr_system;
  gr->add_option("--region", region_path, "Region or synthesis report JSON")->required();
  gr->add_option("--theta", gr_cfg.theta, "Region shrink factor")->capture_default_str();
  gr->add_option("--criterion", criterion, "maxeig|trace|logdet")
      ->check(CLI::IsMember({"maxeig", "trace", "logdet"}))
      ->capture_default_str();
  gr->add_option("--budget", budget, "Maximum number of eliminations");
  gr->add_option("--system", gr_system, "System JSON for H-infinity verification");
  gr->add_option("--out", out_path, "Output gain JSON");
  gr->add_option("--report", report_path, "Run report JSON (stdout if no --out)");

  // sweep
  CLI::App* sw = app.add_subcommand("sweep", "Density/performance tradeoff over theta");
  std::string thetas = "0,0.2,0.4,0.6,0.8,1";
  std::string methods = "l1,greedy";
  std::string family;
  int family_n = 12;
  std::string seeds;
  std::string csv_out, summary_out;
  int threads = 1;
  SynthesisFlags sw_flags;
  sw->add_option("--system", system_path, "System JSON");
  sw->add_option("--family", family, "Generate one plant per seed instead: gaussian|spatial")
      ->check(CLI::IsMember({"gaussian", "spatial"}));
  sw->add_option("--n", family_n, "Size of generated plants")->capture_default_str();
  sw->add_option("--seeds", seeds, "Comma-separated seeds for generated plants");
  sw->add_option("--gamma", gamma, "Attenuation level (default 1.25 × floor per plant)");
  sw->add_option("--thetas", thetas, "Comma-separated theta values")->capture_default_str();
  sw->add_option("--methods", methods, "Comma-separated methods")->capture_default_str();
  sw->add_option("--threads", threads, "Concurrent cells")->capture_default_str();
  sw->add_option("--csv", csv_out, "Per-row CSV");
  sw->add_option("--summary-csv", summary_out, "Seed-averaged CSV");
  sw->add_option("--out", out_path, "Output report JSON");
  sw_flags.Register(sw);

  // perturb
  CLI::App* pt = app.add_subcommand("perturb", "Monte-Carlo fragility of a gain");
  PerturbationStudyConfig pcfg;
  pt->add_option("--system", system_path, "System JSON")->required();
  pt->add_option("--gain", gain_path, "Gain JSON")->required();
  pt->add_option("--samples", pcfg.samples, "Sample count")->capture_default_str();
  pt->add_option("--magnitude", pcfg.magnitude, "Perturbation scale")->capture_default_str();
  pt->add_option("--csv", csv_out, "Per-sample CSV");
  pt->add_option("--out", out_path, "Output report JSON");

  // hinf
  CLI::App* hf = app.add_subcommand("hinf", "Closed-loop H-infinity norm");
  hf->add_option("--system", system_path, "System JSON")->required();
  hf->add_option("--gain", gain_path, "Gain JSON (zero gain if absent)");
  hf->add_option("--out", out_path, "Output report JSON");

  // floor
  CLI::App* fl = app.add_subcommand("floor", "Smallest feasible attenuation level");
  double floor_tol = 1e-2;
  SynthesisFlags fl_flags;
  fl->add_option("--system", system_path, "System JSON")->required();
  fl->add_option("--tol", floor_tol, "Relative tolerance")->capture_default_str();
  fl->add_option("--out", out_path, "Output report JSON");
  fl_flags.Register(fl);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  if (gen->parsed()) {
    Json report;
    if (gen_gauss->parsed()) {
      gauss.seed = seed;
      report = io::SystemToJson(GenDenseGaussian(gauss));
    } else {
      spatial.seed = seed;
      Eigen::MatrixX2d positions;
      const StateSpaceSystem sys = GenSpatialDecay(spatial, &positions);
      report = io::SystemToJson(sys);
      report["positions"] = io::MatrixToJson(positions);
      if (!edges_out.empty()) io::WriteText(edges_out, report::PlantEdgesCsv(sys.A));
    }
    Emit(report, gen_out);
    return 0;
  }

  if (syn->parsed()) {
    const StateSpaceSystem sys = io::SystemFromJson(io::ReadJson(system_path));
    const SynthesisOptions opts = syn_flags.Options();
    Json report;
    const double g = ResolveGamma(sys, gamma, opts, &report);
    const SynthesisResult r = SynthesizeRegion(sys, g, opts);
    report["gamma"] = g;
    report["center_hinf"] = r.center_hinf.value;
    report["margin"] = r.solution.margin;
    report["condition_cap"] =
        r.solution.condition_cap ? Json(*r.solution.condition_cap) : Json(nullptr);
    report["solver_status"] = r.solution.solver_status;
    report["solver_iterations"] = r.solution.solver_iterations;
    if (!out_path.empty()) io::WriteJson(out_path, io::RegionToJson(r.region));
    if (!report_path.empty() || out_path.empty()) {
      report["region"] = io::RegionToJson(r.region);
      Emit(report, report_path);
    }
    return 0;
  }

  if (l1->parsed()) {
    const EllipsoidRegion region = LoadRegion(region_path);
    std::optional<StateSpaceSystem> sys;
    if (!l1_system.empty()) sys = io::SystemFromJson(io::ReadJson(l1_system));
    const ReweightResult r =
        ReweightedL1(region, l1_cfg, *sdp::DefaultBackend(), sys ? &*sys : nullptr);
    Json report;
    report["theta"] = l1_cfg.theta;
    report["converged"] = r.history.converged;
    report["truncated"] = r.history.truncated;
    report["restored"] = r.history.restored;
    report["nnz"] = r.gain.Nonzeros();
    report["nnz_center"] = FeedbackGain{region.F_o}.Nonzeros();
    if (r.hinf) report["hinf"] = r.hinf->value;
    Json iters = Json::array();
    for (const ReweightRecord& rec : r.history.iterations) {
      Json it;
      it["eps"] = std::isfinite(rec.eps) ? Json(rec.eps) : Json(nullptr);
      it["nnz"] = rec.nnz;
      it["objective"] = rec.objective;
      iters.push_back(std::move(it));
    }
    report["iterations"] = std::move(iters);
    EmitGain(r.gain, report, out_path, report_path);
    return 0;
  }

  if (gr->parsed()) {
    const EllipsoidRegion region = LoadRegion(region_path);
    std::optional<StateSpaceSystem> sys;
    if (!gr_system.empty()) sys = io::SystemFromJson(io::ReadJson(gr_system));
    gr_cfg.criterion = criterion == "trace"    ? GreedyCriterion::kTrace
                       : criterion == "logdet" ? GreedyCriterion::kLogDet
                                               : GreedyCriterion::kMaxEig;
    gr_cfg.sparsity_budget = budget;
    const GreedyResult r = RunGreedy(region, gr_cfg, sys ? &*sys : nullptr);
    Json report;
    report["theta"] = gr_cfg.theta;
    report["criterion"] = criterion;
    report["degenerate"] = r.degenerate;
    report["refreshes"] = r.refreshes;
    report["nnz"] = r.gain.Nonzeros();
    report["nnz_center"] = FeedbackGain{region.F_o}.Nonzeros();
    if (r.hinf) report["hinf"] = r.hinf->value;
    Json steps = Json::array();
    for (const GreedyStepRecord& rec : r.steps) {
      Json st;
      st["i"] = rec.i;
      st["j"] = rec.j;
      st["score"] = rec.score;
      st["lambda_min_E"] = rec.lambda_min_E;
      st["nnz"] = rec.nnz;
      steps.push_back(std::move(st));
    }
    report["steps"] = std::move(steps);
    EmitGain(r.gain, report, out_path, report_path);
    return 0;
  }

  if (sw->parsed()) {
    SweepConfig cfg;
    cfg.thetas = ParseList(thetas);
    cfg.methods.clear();
    for (const std::string& name : SplitNames(methods)) cfg.methods.push_back(ParseMethod(name));
    cfg.threads = threads;
    const SynthesisOptions opts = sw_flags.Options();

    std::vector<std::pair<std::uint64_t, StateSpaceSystem>> plants;
    if (!family.empty()) {
      const std::vector<double> list =
          seeds.empty() ? std::vector<double>{double(seed)} : ParseList(seeds);
      for (double s : list) {
        const auto sd = static_cast<std::uint64_t>(s);
        if (family == "gaussian") {
          plants.emplace_back(sd, GenDenseGaussian({family_n, family_n, sd}));
        } else {
          SpatialDecayConfig c;
          c.n = family_n;
          c.seed = sd;
          plants.emplace_back(sd, GenSpatialDecay(c));
        }
      }
    } else if (!system_path.empty()) {
      plants.emplace_back(seed, io::SystemFromJson(io::ReadJson(system_path)));
    } else {
      throw Error("sweep needs --system or --family");
    }

    Json report;
    Json plants_json = Json::array();
    std::vector<SweepRow> rows;
    for (const auto& [sd, sys] : plants) {
      Json p;
      p["seed"] = sd;
      const double g = ResolveGamma(sys, gamma, opts, &p);
      p["gamma"] = g;
      const SynthesisResult s = SynthesizeRegion(sys, g, opts);
      p["center_hinf"] = s.center_hinf.value;
      plants_json.push_back(std::move(p));
      const std::vector<SweepRow> part = ThetaSweep(sys, s.region, s.center_hinf.value, sd, cfg);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    const std::vector<report::SweepSummary> summary = report::Summarize(rows);
    report["plants"] = std::move(plants_json);
    report["rows"] = report::SweepJson(rows);
    if (!csv_out.empty()) io::WriteText(csv_out, report::SweepCsv(rows));
    if (!summary_out.empty()) io::WriteText(summary_out, report::SummaryCsv(summary));
    Emit(report, out_path);
    return 0;
  }

  if (pt->parsed()) {
    const StateSpaceSystem sys = io::SystemFromJson(io::ReadJson(system_path));
    const FeedbackGain F = LoadGain(gain_path);
    pcfg.seed = seed;
    const std::vector<double> samples = PerturbationStudy(sys, F, pcfg);
    int unstable = 0;
    for (double s : samples) unstable += std::isinf(s) ? 1 : 0;
    Json report;
    report["samples"] = samples.size();
    report["magnitude"] = pcfg.magnitude;
    report["seed"] = seed;
    report["unstable"] = unstable;
    for (const auto& [name, q] : {std::pair{"q10", 0.1}, {"median", 0.5}, {"q90", 0.9}}) {
      const double v = EmpiricalQuantile(samples, q);
      report[name] = std::isfinite(v) ? Json(v) : Json(nullptr);
    }
    if (!csv_out.empty()) io::WriteText(csv_out, report::PerturbationCsv({"gain"}, {samples}));
    Emit(report, out_path);
    return 0;
  }

  if (hf->parsed()) {
    const StateSpaceSystem sys = io::SystemFromJson(io::ReadJson(system_path));
    const FeedbackGain F = gain_path.empty() ? FeedbackGain{Eigen::MatrixXd::Zero(sys.m(), sys.n())}
                                             : LoadGain(gain_path);
    const HinfResult h = HinfNorm(CloseLoop(sys, F));
    Json report;
    report["stable"] = std::isfinite(h.value);
    report["hinf"] = std::isfinite(h.value) ? Json(h.value) : Json(nullptr);
    report["upper"] = std::isfinite(h.upper) ? Json(h.upper) : Json(nullptr);
    report["converged"] = h.converged;
    report["nnz"] = F.Nonzeros();
    Emit(report, out_path);
    return 0;
  }

  if (fl->parsed()) {
    const StateSpaceSystem sys = io::SystemFromJson(io::ReadJson(system_path));
    GammaFloorOptions fo;
    fo.rel_tol = floor_tol;
    fo.synthesis = fl_flags.Options();
    Json report;
    report["gamma_floor"] = GammaFloor(sys, fo);
    report["tol"] = floor_tol;
    Emit(report, out_path);
    return 0;
  }
  return 0;
}

}  // namespace
}  // namespace hinfsparse

int main(int argc, char** argv) {
  try {
    return hinfsparse::Run(argc, argv);
  } catch (const hinfsparse::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
