// Command-line driver: simulate SDE sample paths, identify Levy parameters
// and noise intensity, learn drift and diffusion, run the full pipeline, or
// scan estimation errors across hyperparameters.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "levykm/io.hpp"
#include "levykm/pipeline.hpp"

namespace {

using namespace levykm;

struct EstimationFlags {
  double eps = 0.5;
  double m = 5.0;
  int N = 1;
  std::string bins = "10:25";
  std::string window;

  EstimationConfig to_config(int n) const {
    EstimationConfig cfg;
    cfg.epsilon = eps;
    cfg.ratio_m = m;
    cfg.num_intervals = N;
    cfg.nc_list.clear();
    const auto colon = bins.find(':');
    if (colon == std::string::npos) {
      cfg.nc_list.push_back(std::stoi(bins));
    } else {
      const int lo = std::stoi(bins.substr(0, colon));
      const int hi = std::stoi(bins.substr(colon + 1));
      for (int nc = lo; nc <= hi; ++nc) cfg.nc_list.push_back(nc);
    }
    if (!window.empty()) {
      // "lo:hi" applied to every dimension, or comma-separated per-dimension
      std::vector<std::pair<double, double>> ranges;
      std::size_t pos = 0;
      while (pos < window.size()) {
        auto comma = window.find(',', pos);
        if (comma == std::string::npos) comma = window.size();
        const std::string part = window.substr(pos, comma - pos);
        const auto c = part.find(':');
        if (c == std::string::npos) throw CLI::ValidationError("--window expects lo:hi[,lo:hi...]");
        ranges.emplace_back(std::stod(part.substr(0, c)), std::stod(part.substr(c + 1)));
        pos = comma + 1;
      }
      if (ranges.size() == 1 && n > 1) ranges.assign(static_cast<std::size_t>(n), ranges[0]);
      for (const auto& [lo, hi] : ranges) {
        cfg.z_min.push_back(lo);
        cfg.z_max.push_back(hi);
      }
    }
    return cfg;
  }
};

struct LearnFlags {
  std::string dict = "poly:3";
  std::string method = "ssr";
  int kcv = 5;
  double lambda = 0.05;
  double eps = 1.0;
  int grid_bins = 0;  // > 0 enables binning preprocessing

  LearnConfig to_config(int n, std::uint64_t seed) const {
    LearnConfig cfg;
    cfg.epsilon = eps;
    if (dict.rfind("poly:", 0) != 0)
      throw CLI::ValidationError("--dict expects poly:<degree>");
    cfg.dict_degree = std::stoi(dict.substr(5));
    cfg.regression.method = method == "sindy" ? RegressionOptions::Method::kSindy
                                              : RegressionOptions::Method::kSsrCv;
    cfg.regression.kcv = kcv;
    cfg.regression.lambda = lambda;
    cfg.regression.seed = seed;
    if (grid_bins > 0) {
      cfg.binning = true;
      cfg.bins_per_dim.assign(static_cast<std::size_t>(n), grid_bins);
    }
    return cfg;
  }
};

int fail(const std::string& stage, const std::string& message) {
  json err;
  err["error"] = {{"stage", stage}, {"message", message}};
  std::fprintf(stderr, "%s\n", err.dump().c_str());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Identification of SDEs with multiplicative Brownian and Levy noise"};
  app.require_subcommand(1);

  std::string model_path, data_path, levy_path, out_path;
  std::int64_t samples = 0;
  double dt = 1e-3, horizon = 0.0;
  std::uint64_t seed = 1;
  int threads = 1;
  EstimationFlags est;
  LearnFlags learn;

  auto add_est_flags = [&](CLI::App* cmd) {
    cmd->add_option("--eps", est.eps, "inner truncation epsilon");
    cmd->add_option("--m", est.m, "geometric interval ratio m > 1");
    cmd->add_option("--N", est.N, "interval count per sign (N)");
    cmd->add_option("--bins", est.bins, "Nc sweep as lo:hi or a single value");
    cmd->add_option("--window", est.window, "estimation window lo:hi[,lo:hi...]");
  };
  auto add_learn_flags = [&](CLI::App* cmd) {
    cmd->add_option("--dict", learn.dict, "candidate dictionary, poly:<degree>");
    cmd->add_option("--method", learn.method, "sparse solver: sindy | ssr")
        ->check(CLI::IsMember({"sindy", "ssr"}));
    cmd->add_option("--kcv", learn.kcv, "cross-validation folds");
    cmd->add_option("--lambda", learn.lambda, "SINDy threshold");
    cmd->add_option("--learn-eps", learn.eps, "truncation cube half-width");
    cmd->add_option("--grid-bins", learn.grid_bins, "binning preprocess bins per dimension");
  };

  CLI::App* sim = app.add_subcommand("simulate", "generate a paired dataset");
  sim->add_option("--model", model_path, "model JSON file")->required();
  sim->add_option("--out", out_path, "output CSV path")->required();
  sim->add_option("--samples", samples, "pair count M (or M0 with --horizon)")->required();
  sim->add_option("--dt", dt, "time step h");
  sim->add_option("--horizon", horizon, "integration time T; selects trajectory mode");
  sim->add_option("--seed", seed, "master seed");
  sim->add_option("--threads", threads, "worker threads");

  CLI::App* el = app.add_subcommand("estimate-levy", "estimate alpha, beta and sigma(x)");
  std::string sigma_dict = "poly:4";
  el->add_option("--data", data_path, "dataset CSV")->required();
  el->add_option("--out", out_path, "output levy.json")->required();
  add_est_flags(el);
  el->add_option("--dict", sigma_dict, "intensity dictionary, poly:<degree>");
  el->add_option("--method", learn.method, "sparse solver: sindy | ssr")
      ->check(CLI::IsMember({"sindy", "ssr"}));
  el->add_option("--kcv", learn.kcv, "cross-validation folds");
  el->add_option("--lambda", learn.lambda, "SINDy threshold");
  el->add_option("--seed", seed, "seed for cross-validation folds");

  CLI::App* ed = app.add_subcommand("estimate-drift", "learn the drift coefficient");
  ed->add_option("--data", data_path, "dataset CSV")->required();
  ed->add_option("--levy", levy_path, "levy.json from estimate-levy")->required();
  ed->add_option("--out", out_path, "output drift.json")->required();
  add_learn_flags(ed);
  ed->add_option("--seed", seed, "seed for cross-validation folds");

  CLI::App* edf = app.add_subcommand("estimate-diffusion", "learn the diffusion matrix");
  edf->add_option("--data", data_path, "dataset CSV")->required();
  edf->add_option("--levy", levy_path, "levy.json from estimate-levy")->required();
  edf->add_option("--out", out_path, "output diffusion.json")->required();
  add_learn_flags(edf);
  edf->add_option("--seed", seed, "seed for cross-validation folds");

  CLI::App* pipe = app.add_subcommand("pipeline", "simulate, estimate and learn in one run");
  pipe->add_option("--model", model_path, "model JSON file")->required();
  pipe->add_option("--out", out_path, "output directory")->required();
  pipe->add_option("--samples", samples, "pair count M (or M0 with --horizon)");
  pipe->add_option("--data", data_path, "reuse an existing dataset CSV");
  pipe->add_option("--dt", dt, "time step h");
  pipe->add_option("--horizon", horizon, "integration time T; selects trajectory mode");
  pipe->add_option("--seed", seed, "master seed");
  pipe->add_option("--threads", threads, "worker threads");
  add_est_flags(pipe);
  add_learn_flags(pipe);

  std::string vary = "M", values_csv, seeds_csv = "1";
  CLI::App* scan = app.add_subcommand("error-scan", "Levy-stage errors across M or h");
  scan->add_option("--model", model_path, "model JSON file")->required();
  scan->add_option("--out", out_path, "output CSV path")->required();
  scan->add_option("--vary", vary, "M | h | Mh-fixed")->check(CLI::IsMember({"M", "h", "Mh-fixed"}));
  scan->add_option("--values", values_csv, "comma-separated scan values")->required();
  scan->add_option("--samples", samples, "base M (vary-h and Mh-fixed modes)");
  scan->add_option("--dt", dt, "base h (vary-M and Mh-fixed modes)");
  scan->add_option("--seeds", seeds_csv, "comma-separated seeds to average");
  scan->add_option("--threads", threads, "worker threads");
  add_est_flags(scan);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const ModelSpec model = load_model(model_path);
      PairDataset ds;
      if (horizon > 0.0)
        ds = generate_trajectories(model, samples, horizon, dt, seed, threads);
      else
        ds = generate_pairs(model, samples, dt, seed, threads);
      save_dataset(ds, out_path);
      std::printf("wrote %lld pairs to %s\n", static_cast<long long>(ds.rows), out_path.c_str());
    } else if (el->parsed()) {
      const PairDataset ds = load_dataset(data_path);
      const EstimationConfig cfg = est.to_config(ds.n);
      RegressionOptions opt = learn.to_config(ds.n, seed).regression;
      if (sigma_dict.rfind("poly:", 0) != 0)
        throw std::invalid_argument("--dict expects poly:<degree>");
      const int degree = std::stoi(sigma_dict.substr(5));
      const LevyEstimate result = estimate_levy(ds, cfg, opt, degree);
      write_json_file(levy_to_json(result), out_path);
      std::printf("wrote %s\n", out_path.c_str());
    } else if (ed->parsed() || edf->parsed()) {
      const PairDataset ds = load_dataset(data_path);
      const LevyEstimate levy = load_levy(levy_path);
      const LearnConfig cfg = learn.to_config(ds.n, seed);
      DriftDiffusionFit fit;
      fit.dictionary = Dictionary::monomials(ds.n, cfg.dict_degree);
      fit.basis = fit.dictionary.names();
      if (ed->parsed()) {
        fit.drift = learn_drift(ds, levy, cfg);
        write_json_file(drift_to_json(fit), out_path);
      } else {
        fit.drift.resize(static_cast<std::size_t>(ds.n));  // sizes the pair table
        fit.diffusion = learn_diffusion(ds, levy, cfg);
        write_json_file(diffusion_to_json(fit), out_path);
      }
      std::printf("wrote %s\n", out_path.c_str());
    } else if (pipe->parsed()) {
      RunConfig cfg;
      cfg.model = load_model(model_path);
      cfg.samples = horizon > 0.0 ? 0 : samples;
      cfg.initial_points = horizon > 0.0 ? samples : 0;
      cfg.horizon = horizon;
      cfg.h = dt;
      cfg.seed = seed;
      cfg.threads = threads;
      cfg.data_path = data_path;
      cfg.estimation = est.to_config(cfg.model.n);
      cfg.learn = learn.to_config(cfg.model.n, seed);
      cfg.out_dir = out_path;
      run_pipeline(cfg);
      std::printf("pipeline results in %s\n", out_path.c_str());
    } else if (scan->parsed()) {
      const ModelSpec model = load_model(model_path);
      std::vector<double> values;
      for (std::size_t pos = 0; pos < values_csv.size();) {
        auto comma = values_csv.find(',', pos);
        if (comma == std::string::npos) comma = values_csv.size();
        values.push_back(std::stod(values_csv.substr(pos, comma - pos)));
        pos = comma + 1;
      }
      std::vector<std::uint64_t> seeds;
      for (std::size_t pos = 0; pos < seeds_csv.size();) {
        auto comma = seeds_csv.find(',', pos);
        if (comma == std::string::npos) comma = seeds_csv.size();
        seeds.push_back(std::stoull(seeds_csv.substr(pos, comma - pos)));
        pos = comma + 1;
      }
      const ScanMode mode = vary == "M" ? ScanMode::kVaryM
                            : vary == "h" ? ScanMode::kVaryH
                                          : ScanMode::kFixedMh;
      RegressionOptions opt;
      opt.seed = seeds.front();
      const auto points =
          error_scan(model, mode, values, est.to_config(model.n), opt, samples, dt, seeds, threads);
      write_scan_csv(points, model.n, out_path);
      std::printf("wrote %s\n", out_path.c_str());
    }
  } catch (const StageError& e) {
    return fail(e.stage, e.what());
  } catch (const SchemaError& e) {
    return fail("schema", e.what());
  } catch (const std::exception& e) {
    return fail("run", e.what());
  }
  return 0;
}
