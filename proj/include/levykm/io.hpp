#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "levykm/estimate.hpp"
#include "levykm/learner.hpp"
#include "levykm/metrics.hpp"
#include "levykm/model.hpp"

namespace levykm {

using json = nlohmann::ordered_json;

// File-format violation, carrying a JSON-pointer-like path to the offender.
struct SchemaError : std::runtime_error {
  SchemaError(const std::string& path, const std::string& msg)
      : std::runtime_error("schema error at " + path + ": " + msg), pointer(path) {}
  std::string pointer;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline const json& require(const json& j, const std::string& parent, const std::string& key) {
  if (!j.contains(key)) throw SchemaError(parent + "/" + key, "missing required key");
  return j.at(key);
}

inline Expr parse_expr_at(const json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected an expression string");
  try {
    return Expr::parse(j.get<std::string>());
  } catch (const ParseError& e) {
    throw SchemaError(path, e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

inline json model_to_json(const ModelSpec& m) {
  json j;
  j["n"] = m.n;
  j["drift"] = json::array();
  for (const Expr& e : m.drift) j["drift"].push_back(e.str());
  j["diffusion_factor"] = json::array();
  for (const auto& row : m.diffusion_factor) {
    json r = json::array();
    for (const Expr& e : row) r.push_back(e.str());
    j["diffusion_factor"].push_back(r);
  }
  j["sigma"] = json::array();
  for (const Expr& e : m.sigma) j["sigma"].push_back(e.str());
  j["levy"] = json::array();
  for (const StableParams& p : m.levy) j["levy"].push_back({{"alpha", p.alpha}, {"beta", p.beta}});
  j["domain"] = json::array();
  for (const auto& d : m.domain) j["domain"].push_back({d[0], d[1]});
  return j;
}

inline ModelSpec model_from_json(const json& j) {
  ModelSpec m;
  const json& jn = detail::require(j, "", "n");
  if (!jn.is_number_integer()) throw SchemaError("/n", "expected an integer");
  m.n = jn.get<int>();
  if (m.n < 1) throw SchemaError("/n", "dimension must be >= 1");

  const json& jd = detail::require(j, "", "drift");
  if (!jd.is_array() || jd.size() != static_cast<std::size_t>(m.n))
    throw SchemaError("/drift", "expected an array of n expressions");
  for (std::size_t i = 0; i < jd.size(); ++i)
    m.drift.push_back(detail::parse_expr_at(jd[i], "/drift/" + std::to_string(i)));

  const json& jl = detail::require(j, "", "diffusion_factor");
  if (!jl.is_array() || jl.size() != static_cast<std::size_t>(m.n))
    throw SchemaError("/diffusion_factor", "expected an n x n array of expressions");
  for (std::size_t i = 0; i < jl.size(); ++i) {
    if (!jl[i].is_array() || jl[i].size() != static_cast<std::size_t>(m.n))
      throw SchemaError("/diffusion_factor/" + std::to_string(i), "expected a row of n expressions");
    std::vector<Expr> row;
    for (std::size_t k = 0; k < jl[i].size(); ++k)
      row.push_back(detail::parse_expr_at(jl[i][k], "/diffusion_factor/" + std::to_string(i) + "/" +
                                                        std::to_string(k)));
    m.diffusion_factor.push_back(std::move(row));
  }

  const json& js = detail::require(j, "", "sigma");
  if (!js.is_array() || js.size() != static_cast<std::size_t>(m.n))
    throw SchemaError("/sigma", "expected an array of n expressions");
  for (std::size_t i = 0; i < js.size(); ++i)
    m.sigma.push_back(detail::parse_expr_at(js[i], "/sigma/" + std::to_string(i)));

  const json& jv = detail::require(j, "", "levy");
  if (!jv.is_array() || jv.size() != static_cast<std::size_t>(m.n))
    throw SchemaError("/levy", "expected an array of n {alpha, beta} objects");
  for (std::size_t i = 0; i < jv.size(); ++i) {
    const std::string path = "/levy/" + std::to_string(i);
    if (!jv[i].is_object()) throw SchemaError(path, "expected an object");
    StableParams p;
    p.alpha = detail::require(jv[i], path, "alpha").get<double>();
    p.beta = detail::require(jv[i], path, "beta").get<double>();
    m.levy.push_back(p);
  }

  const json& jdom = detail::require(j, "", "domain");
  if (!jdom.is_array() || jdom.size() != static_cast<std::size_t>(m.n))
    throw SchemaError("/domain", "expected an array of n [lo, hi] intervals");
  for (std::size_t i = 0; i < jdom.size(); ++i) {
    if (!jdom[i].is_array() || jdom[i].size() != 2)
      throw SchemaError("/domain/" + std::to_string(i), "expected [lo, hi]");
    m.domain.push_back({jdom[i][0].get<double>(), jdom[i][1].get<double>()});
  }

  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError("", e.what());
  }
  return m;
}

inline ModelSpec load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError("", std::string("invalid JSON: ") + e.what());
  }
  return model_from_json(j);
}

inline void save_model(const ModelSpec& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << model_to_json(m).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Pair datasets: CSV with header z_1..z_n,x_1..x_n plus a JSON sidecar
// ---------------------------------------------------------------------------

inline std::string dataset_meta_path(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".meta.json");
  return p.string();
}

inline void save_dataset(const PairDataset& ds, const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("cannot write dataset: " + csv_path);
  for (int i = 0; i < ds.n; ++i) out << "z_" << (i + 1) << ',';
  for (int i = 0; i < ds.n; ++i) out << "x_" << (i + 1) << (i + 1 < ds.n ? ',' : '\n');
  std::string line;
  for (std::int64_t r = 0; r < ds.rows; ++r) {
    line.clear();
    for (int i = 0; i < ds.n; ++i) {
      line += detail::format_double(ds.z_at(r, i));
      line += ',';
    }
    for (int i = 0; i < ds.n; ++i) {
      line += detail::format_double(ds.x_at(r, i));
      line += i + 1 < ds.n ? "," : "\n";
    }
    out << line;
  }
  json meta;
  meta["n"] = ds.n;
  meta["M"] = ds.rows;
  meta["h"] = ds.h;
  meta["seed"] = ds.seed;
  meta["model_fingerprint"] = ds.model_fingerprint;
  std::ofstream mo(dataset_meta_path(csv_path));
  if (!mo) throw std::runtime_error("cannot write dataset metadata for: " + csv_path);
  mo << meta.dump(2) << '\n';
}

inline PairDataset load_dataset(const std::string& csv_path) {
  std::ifstream meta_in(dataset_meta_path(csv_path));
  if (!meta_in) throw std::runtime_error("missing dataset metadata: " + dataset_meta_path(csv_path));
  json meta;
  try {
    meta_in >> meta;
  } catch (const json::exception& e) {
    throw SchemaError("", std::string("invalid dataset metadata: ") + e.what());
  }
  PairDataset ds;
  ds.n = detail::require(meta, "", "n").get<int>();
  ds.rows = detail::require(meta, "", "M").get<std::int64_t>();
  ds.h = detail::require(meta, "", "h").get<double>();
  ds.seed = detail::require(meta, "", "seed").get<std::uint64_t>();
  ds.model_fingerprint = detail::require(meta, "", "model_fingerprint").get<std::string>();
  if (ds.n < 1) throw SchemaError("/n", "dimension must be >= 1");

  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open dataset: " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(csv_path + ": line 1: missing header");
  ds.z.reserve(static_cast<std::size_t>(ds.rows) * ds.n);
  ds.x.reserve(static_cast<std::size_t>(ds.rows) * ds.n);
  std::int64_t line_no = 1;
  const int cols = 2 * ds.n;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const char* ptr = line.data();
    const char* end = line.data() + line.size();
    for (int c = 0; c < cols; ++c) {
      double v = 0.0;
      auto res = std::from_chars(ptr, end, v);
      if (res.ec != std::errc{})
        throw std::runtime_error(csv_path + ": line " + std::to_string(line_no) +
                                 ": malformed number in column " + std::to_string(c + 1));
      ptr = res.ptr;
      if (c + 1 < cols) {
        if (ptr >= end || *ptr != ',')
          throw std::runtime_error(csv_path + ": line " + std::to_string(line_no) +
                                   ": expected " + std::to_string(cols) + " columns");
        ++ptr;
      }
      (c < ds.n ? ds.z : ds.x).push_back(v);
    }
    if (ptr != end)
      throw std::runtime_error(csv_path + ": line " + std::to_string(line_no) + ": trailing data");
  }
  if (static_cast<std::int64_t>(ds.z.size()) != ds.rows * ds.n)
    throw std::runtime_error(csv_path + ": line " + std::to_string(line_no + 1) +
                             ": expected " + std::to_string(ds.rows) + " data rows, found " +
                             std::to_string(ds.z.size() / ds.n));
  return ds;
}

// ---------------------------------------------------------------------------
// Result files
// ---------------------------------------------------------------------------

inline json sparse_fit_to_json(const SparseFit& fit) {
  json j;
  j["coefficients"] = std::vector<double>(fit.coefficients.data(),
                                          fit.coefficients.data() + fit.coefficients.size());
  j["support"] = fit.support;
  j["residual"] = fit.residual;
  if (!fit.cv_path.empty()) {
    json cv = json::array();
    for (const auto& [q, s] : fit.cv_path) cv.push_back({{"q", q}, {"score", s}});
    j["cv_path"] = cv;
  }
  return j;
}

inline json levy_to_json(const LevyEstimate& est) {
  json j;
  j["alpha"] = est.alpha;
  j["beta"] = est.beta;
  j["sigma_bins"] = json::array();
  const int n = static_cast<int>(est.alpha.size());
  for (int dim = 0; dim < n; ++dim) {
    // one entry per (dim, Nc) group, in sweep order
    json entry;
    int current_nc = -1;
    for (const SigmaPoint& p : est.sigma_points[dim]) {
      if (p.nc != current_nc) {
        if (current_nc != -1) j["sigma_bins"].push_back(entry);
        entry = json{{"dim", dim + 1}, {"Nc", p.nc}, {"midpoints", json::array()}, {"values", json::array()}};
        current_nc = p.nc;
      }
      entry["midpoints"].push_back(p.midpoint);
      entry["values"].push_back(p.sigma);
    }
    if (current_nc != -1) j["sigma_bins"].push_back(entry);
  }
  j["sigma_fit"] = json::array();
  for (int dim = 0; dim < n; ++dim) {
    json f = sparse_fit_to_json(est.sigma_fit[dim]);
    f["dim"] = dim + 1;
    f["basis"] = est.sigma_dictionary.names();
    j["sigma_fit"].push_back(f);
  }
  j["diagnostics"] = est.diagnostics;
  return j;
}

inline LevyEstimate levy_from_json(const json& j, int sigma_degree = 4) {
  LevyEstimate est;
  est.alpha = detail::require(j, "", "alpha").get<std::vector<double>>();
  est.beta = detail::require(j, "", "beta").get<std::vector<double>>();
  const int n = static_cast<int>(est.alpha.size());
  est.sigma_dictionary = Dictionary::monomials(1, sigma_degree);
  est.sigma_points.resize(n);
  est.channel_enabled.assign(n, true);
  for (const json& entry : detail::require(j, "", "sigma_bins")) {
    const int dim = entry.at("dim").get<int>() - 1;
    const int nc = entry.at("Nc").get<int>();
    const auto mids = entry.at("midpoints").get<std::vector<double>>();
    const auto vals = entry.at("values").get<std::vector<double>>();
    for (std::size_t k = 0; k < mids.size(); ++k)
      est.sigma_points[dim].push_back({mids[k], vals[k], nc});
  }
  est.sigma_fit.resize(n);
  for (const json& f : detail::require(j, "", "sigma_fit")) {
    const int dim = f.at("dim").get<int>() - 1;
    const auto coeffs = f.at("coefficients").get<std::vector<double>>();
    if (coeffs.size() != est.sigma_dictionary.size())
      throw SchemaError("/sigma_fit", "coefficient count does not match the dictionary degree");
    SparseFit fit;
    fit.coefficients = Eigen::Map<const Vector>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
    for (int k = 0; k < fit.coefficients.size(); ++k)
      if (fit.coefficients[k] != 0.0) fit.support.push_back(k);
    est.sigma_fit[dim] = std::move(fit);
  }
  return est;
}

inline LevyEstimate load_levy(const std::string& path, int sigma_degree = 4) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open levy result: " + path);
  json j;
  in >> j;
  return levy_from_json(j, sigma_degree);
}

inline json drift_to_json(const DriftDiffusionFit& fit) {
  json j;
  j["basis"] = fit.basis;
  j["coefficients"] = json::object();
  for (std::size_t i = 0; i < fit.drift.size(); ++i) {
    json f = sparse_fit_to_json(fit.drift[i]);
    j["coefficients"][std::to_string(i + 1)] = f;
  }
  j["m_ratio"] = fit.m_ratio;
  return j;
}

inline json diffusion_to_json(const DriftDiffusionFit& fit) {
  json j;
  j["basis"] = fit.basis;
  j["coefficients"] = json::object();
  const int n = static_cast<int>(fit.drift.size());
  for (int i = 0; i < n; ++i)
    for (int k = i; k < n; ++k) {
      const int idx = DriftDiffusionFit::pair_index(i, k, n);
      j["coefficients"][std::to_string(i + 1) + std::to_string(k + 1)] =
          sparse_fit_to_json(fit.diffusion[static_cast<std::size_t>(idx)]);
    }
  j["m_ratio"] = fit.m_ratio;
  return j;
}

inline json report_to_json(const ErrorReport& rep) {
  json j;
  j["e_alpha"] = rep.e_alpha;
  j["e_beta"] = rep.e_beta;
  j["e_sigma"] = rep.e_sigma;
  j["e_sr"] = rep.e_sr;
  return j;
}

inline void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << j.dump(2) << '\n';
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  json j;
  in >> j;
  return j;
}

}  // namespace levykm
