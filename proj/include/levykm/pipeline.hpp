#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "levykm/io.hpp"
#include "levykm/learner.hpp"
#include "levykm/metrics.hpp"
#include "levykm/simulate.hpp"

namespace levykm {

// A pipeline stage failure, tagged with the stage that raised it.
struct StageError : std::runtime_error {
  StageError(const std::string& stage_name, const std::string& msg)
      : std::runtime_error("stage '" + stage_name + "': " + msg), stage(stage_name) {}
  std::string stage;
};

struct RunConfig {
  ModelSpec model;
  std::int64_t samples = 0;        // M for pair mode
  std::int64_t initial_points = 0; // M0 for trajectory mode
  double horizon = 0.0;            // T; > 0 selects trajectory mode
  double h = 1e-3;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string data_path;           // nonempty: load this dataset instead of simulating
  EstimationConfig estimation;
  int sigma_degree = 4;
  LearnConfig learn;
  std::string out_dir;

  void validate() const {
    if (data_path.empty()) {
      if (horizon > 0.0) {
        if (initial_points < 1) throw std::invalid_argument("config: trajectory mode needs initial_points >= 1");
        if (!(h > 0.0) || horizon < h) throw std::invalid_argument("config: need horizon >= h > 0");
      } else {
        if (samples < 1) throw std::invalid_argument("config: need samples >= 1");
        if (!(h > 0.0)) throw std::invalid_argument("config: need h > 0");
      }
    }
    if (out_dir.empty()) throw std::invalid_argument("config: output directory required");
  }
};

inline json run_config_to_json(const RunConfig& cfg) {
  json j;
  j["model"] = model_to_json(cfg.model);
  j["samples"] = cfg.samples;
  j["initial_points"] = cfg.initial_points;
  j["horizon"] = cfg.horizon;
  j["h"] = cfg.h;
  j["seed"] = cfg.seed;
  j["data_path"] = cfg.data_path;
  j["estimation"] = {{"epsilon", cfg.estimation.epsilon},
                     {"m", cfg.estimation.ratio_m},
                     {"N", cfg.estimation.num_intervals},
                     {"nc_list", cfg.estimation.nc_list}};
  j["sigma_degree"] = cfg.sigma_degree;
  j["learn"] = {{"epsilon", cfg.learn.epsilon},
                {"dict_degree", cfg.learn.dict_degree},
                {"method", cfg.learn.regression.method == RegressionOptions::Method::kSindy ? "sindy" : "ssr"},
                {"lambda", cfg.learn.regression.lambda},
                {"kcv", cfg.learn.regression.kcv},
                {"binning", cfg.learn.binning}};
  return j;
}

struct PipelineResult {
  LevyEstimate levy;
  DriftDiffusionFit fits;
  ErrorReport report;
};

// Full run: simulate (or load) -> estimate the Levy stage -> learn drift and
// diffusion -> write levy.json, drift.json, diffusion.json, report.json. The
// dataset and the echoed configuration are persisted alongside for audit.
inline PipelineResult run_pipeline(const RunConfig& cfg) {
  try {
    cfg.validate();
    cfg.model.validate();
  } catch (const std::exception& e) {
    throw StageError("validate", e.what());
  }

  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const auto out = [&](const std::string& name) { return (fs::path(cfg.out_dir) / name).string(); };
  write_json_file(run_config_to_json(cfg), out("run_config.json"));

  PairDataset data;
  try {
    if (!cfg.data_path.empty())
      data = load_dataset(cfg.data_path);
    else if (cfg.horizon > 0.0)
      data = generate_trajectories(cfg.model, cfg.initial_points, cfg.horizon, cfg.h, cfg.seed,
                                   cfg.threads);
    else
      data = generate_pairs(cfg.model, cfg.samples, cfg.h, cfg.seed, cfg.threads);
    save_dataset(data, out("dataset.csv"));
  } catch (const std::exception& e) {
    throw StageError("simulate", e.what());
  }

  PipelineResult result;
  EstimationConfig est = cfg.estimation;
  if (est.z_min.empty()) {
    for (int i = 0; i < cfg.model.n; ++i) {
      est.z_min.push_back(cfg.model.domain[i][0]);
      est.z_max.push_back(cfg.model.domain[i][1]);
    }
  }
  try {
    RegressionOptions opt = cfg.learn.regression;
    opt.seed = cfg.seed;
    result.levy = estimate_levy(data, est, opt, cfg.sigma_degree);
    write_json_file(levy_to_json(result.levy), out("levy.json"));
  } catch (const std::exception& e) {
    throw StageError("estimate-levy", e.what());
  }

  try {
    LearnConfig learn = cfg.learn;
    learn.regression.seed = cfg.seed;
    result.fits = learn_drift_diffusion(data, result.levy, learn);
    write_json_file(drift_to_json(result.fits), out("drift.json"));
    write_json_file(diffusion_to_json(result.fits), out("diffusion.json"));
  } catch (const std::exception& e) {
    throw StageError("learn", e.what());
  }

  try {
    result.report = compute_error_metrics(result.levy, cfg.model);
    json rep = report_to_json(result.report);
    rep["timestamp"] = std::chrono::duration_cast<std::chrono::seconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count();
    write_json_file(rep, out("report.json"));
  } catch (const std::exception& e) {
    throw StageError("report", e.what());
  }
  return result;
}

// ---------------------------------------------------------------------------
// Hyperparameter error scan (Levy-stage errors against a known model)
// ---------------------------------------------------------------------------

enum class ScanMode { kVaryM, kFixedMh, kVaryH };

inline std::string scan_mode_name(ScanMode m) {
  switch (m) {
    case ScanMode::kVaryM: return "M";
    case ScanMode::kFixedMh: return "Mh-fixed";
    case ScanMode::kVaryH: return "h";
  }
  return {};
}

struct ScanPoint {
  ScanMode mode;
  std::int64_t samples;
  double h;
  ErrorReport errors;  // averaged over seeds
};

// One scan row per value. Modes: vary M at fixed h; vary M at fixed M*h
// (product taken from base_m * base_h); vary h at fixed M. Errors are
// averaged over the given seeds.
inline std::vector<ScanPoint> error_scan(const ModelSpec& model, ScanMode mode,
                                         std::span<const double> values,
                                         const EstimationConfig& est_cfg,
                                         const RegressionOptions& reg_opt, std::int64_t base_m,
                                         double base_h, std::span<const std::uint64_t> seeds,
                                         int threads = 1, int sigma_degree = 4) {
  if (values.empty() || seeds.empty())
    throw std::invalid_argument("error_scan: need at least one value and one seed");
  model.validate();
  EstimationConfig est = est_cfg;
  if (est.z_min.empty()) {
    for (int i = 0; i < model.n; ++i) {
      est.z_min.push_back(model.domain[i][0]);
      est.z_max.push_back(model.domain[i][1]);
    }
  }

  std::vector<ScanPoint> points;
  for (double v : values) {
    std::int64_t m = base_m;
    double h = base_h;
    switch (mode) {
      case ScanMode::kVaryM:
        m = static_cast<std::int64_t>(std::llround(v));
        break;
      case ScanMode::kFixedMh:
        m = static_cast<std::int64_t>(std::llround(v));
        h = static_cast<double>(base_m) * base_h / static_cast<double>(m);
        break;
      case ScanMode::kVaryH:
        h = v;
        break;
    }
    ScanPoint pt{mode, m, h, {}};
    pt.errors.e_alpha.assign(model.n, 0.0);
    pt.errors.e_beta.assign(model.n, 0.0);
    pt.errors.e_sigma.assign(model.n, 0.0);
    pt.errors.e_sr.assign(model.n, 0.0);
    for (std::uint64_t seed : seeds) {
      PairDataset data = generate_pairs(model, m, h, seed, threads);
      LevyEstimate levy = estimate_levy(data, est, reg_opt, sigma_degree);
      ErrorReport rep = compute_error_metrics(levy, model);
      for (int i = 0; i < model.n; ++i) {
        pt.errors.e_alpha[i] += rep.e_alpha[i] / seeds.size();
        pt.errors.e_beta[i] += rep.e_beta[i] / seeds.size();
        pt.errors.e_sigma[i] += rep.e_sigma[i] / seeds.size();
        pt.errors.e_sr[i] += rep.e_sr[i] / seeds.size();
      }
    }
    points.push_back(std::move(pt));
  }
  return points;
}

inline void write_scan_csv(const std::vector<ScanPoint>& points, int n, std::ostream& out) {
  out << "mode,M,h";
  for (int i = 1; i <= n; ++i) out << ",e_alpha_" << i;
  for (int i = 1; i <= n; ++i) out << ",e_beta_" << i;
  for (int i = 1; i <= n; ++i) out << ",e_sigma_" << i;
  out << '\n';
  for (const ScanPoint& p : points) {
    out << scan_mode_name(p.mode) << ',' << p.samples << ',' << detail::format_double(p.h);
    for (double v : p.errors.e_alpha) out << ',' << detail::format_double(v);
    for (double v : p.errors.e_beta) out << ',' << detail::format_double(v);
    for (double v : p.errors.e_sigma) out << ',' << detail::format_double(v);
    out << '\n';
  }
}

inline void write_scan_csv(const std::vector<ScanPoint>& points, int n, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  write_scan_csv(points, n, out);
}

}  // namespace levykm
