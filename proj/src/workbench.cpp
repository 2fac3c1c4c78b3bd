// Copyright (c) the ratchet developers. See the top-level LICENSE file.
// SPDX-License-Identifier: Apache-2.0

#include "ratchet/workbench.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "ratchet/csv.hpp"
#include "ratchet/errors.hpp"

namespace ratchet {

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig c;
  if (j.contains("noise")) c.noise = noise_model_from_json(j["noise"]);
  if (j.contains("sobol")) c.sobol = sobol_config_from_json(j["sobol"]);
  c.draw_index = j.value("draw_index", c.draw_index);
  c.dim_offset = j.value("dim_offset", c.dim_offset);
  return c;
}

ExperimentRecord generate_synthetic_experiment(const MaterialParams& p_true,
                                               const LoadingProgram& program,
                                               const SynthConfig& cfg,
                                               const SimOptions& opts) {
  p_true.validate();
  const SimulationTrace trace = integrate(p_true, program, opts);
  ExperimentRecord rec = extract_extrema(trace, program);

  nlohmann::json prov;
  prov["generator"] = "synthetic";
  prov["p_true"] = params_to_json(p_true);
  prov["noise"] = nullptr;

  if (cfg.draw_index >= 0 && cfg.noise.sigma > 0.0) {
    if (cfg.dim_offset < 0 ||
        cfg.dim_offset + cfg.noise.n_modes > cfg.sobol.dimensions) {
      throw ConfigError("synth: dim_offset + n_modes exceeds sobol dimensions");
    }
    SobolConfig sob = cfg.sobol;
    if (sob.n_draws <= cfg.draw_index) sob.n_draws = cfg.draw_index + 1;
    if (sob.antithetic && sob.n_draws % 2 != 0) ++sob.n_draws;
    const Eigen::MatrixXd normals = sobol_normals(sob);
    Eigen::VectorXd coeffs =
        cfg.noise.sigma *
        normals.row(cfg.draw_index)
            .segment(cfg.dim_offset, cfg.noise.n_modes)
            .transpose();
    const Eigen::VectorXd noise =
        synthesize_noise(std::span<const double>(coeffs.data(), coeffs.size()), rec);
    for (int c = 0; c < rec.n_cycles(); ++c) {
      rec.max_strain[c] += noise[2 * c];
      rec.min_strain[c] += noise[2 * c + 1];
    }
    prov["noise"] = {{"sigma", cfg.noise.sigma},
                     {"n_modes", cfg.noise.n_modes},
                     {"draw_index", cfg.draw_index},
                     {"dim_offset", cfg.dim_offset},
                     {"sobol", sobol_config_to_json(cfg.sobol)}};
  }
  rec.meta.provenance = prov.dump();
  rec.validate();
  return rec;
}

ValidationResult run_validation(const Eigen::VectorXd& p_star,
                                const IdentificationProblem& held_out) {
  ValidationResult out;
  if (held_out.records.empty()) {
    out.empty = true;  // flagged: vacuous validation
    return out;
  }
  held_out.validate();
  out.phi = error_functional(p_star, held_out);
  return out;
}

DiagnosticsThresholds thresholds_from_json(const nlohmann::json& j) {
  DiagnosticsThresholds t;
  t.accuracy_gain_min = j.value("accuracy_gain_min", t.accuracy_gain_min);
  t.corr_limit = j.value("corr_limit", t.corr_limit);
  t.cloud_size_limit = j.value("cloud_size_limit", t.cloud_size_limit);
  return t;
}

nlohmann::json diagnose(const nlohmann::json& fits,
                        const DiagnosticsThresholds& thresholds) {
  if (!fits.is_array() || fits.empty()) {
    throw ConfigError("diagnose: expected a non-empty array of fit summaries");
  }
  struct Entry {
    std::string label;
    int n_params;
    double phi;
    std::optional<double> phi_val;
    std::optional<double> max_corr;
    std::optional<double> cloud_size;
  };
  std::vector<Entry> entries;
  for (const auto& f : fits) {
    Entry e;
    e.label = f.at("label").get<std::string>();
    e.n_params = f.at("n_params").get<int>();
    e.phi = f.at("phi").get<double>();
    if (f.contains("phi_val") && !f["phi_val"].is_null())
      e.phi_val = f["phi_val"].get<double>();
    if (f.contains("max_abs_corr") && !f["max_abs_corr"].is_null())
      e.max_corr = f["max_abs_corr"].get<double>();
    if (f.contains("cloud_size") && !f["cloud_size"].is_null())
      e.cloud_size = f["cloud_size"].get<double>();
    entries.push_back(e);
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.n_params < b.n_params; });

  nlohmann::json models = nlohmann::json::array();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Entry& e = entries[i];
    nlohmann::json crit;

    // I: virtually no gain in accuracy against the next-smaller model.
    {
      nlohmann::json c = {{"threshold", thresholds.accuracy_gain_min},
                          {"flag", false},
                          {"value", nullptr}};
      if (i > 0 && entries[i - 1].phi > 0.0) {
        const double gain = (entries[i - 1].phi - e.phi) / entries[i - 1].phi;
        c["value"] = gain;
        c["flag"] = gain < thresholds.accuracy_gain_min;
      }
      crit["I"] = c;
    }
    // II: deteriorating validation on unseen data.
    {
      nlohmann::json c = {{"threshold", 0.0}, {"flag", false}, {"value", nullptr}};
      if (i > 0 && e.phi_val && entries[i - 1].phi_val) {
        const double rise = *e.phi_val - *entries[i - 1].phi_val;
        c["value"] = rise;
        c["flag"] = rise > 0.0;
      }
      crit["II"] = c;
    }
    // III: significant correlation among parameters.
    {
      nlohmann::json c = {{"threshold", thresholds.corr_limit},
                          {"flag", false},
                          {"value", nullptr}};
      if (e.max_corr) {
        c["value"] = *e.max_corr;
        c["flag"] = *e.max_corr >= thresholds.corr_limit;
      }
      crit["III"] = c;
    }
    // IV: error sensitivity (cloud size) too high.
    {
      nlohmann::json c = {{"threshold", thresholds.cloud_size_limit},
                          {"flag", false},
                          {"value", nullptr}};
      if (e.cloud_size) {
        c["value"] = *e.cloud_size;
        c["flag"] = *e.cloud_size > thresholds.cloud_size_limit;
      }
      crit["IV"] = c;
    }

    bool any = false;
    for (const auto& [key, c] : crit.items()) any = any || c["flag"].get<bool>();
    models.push_back({{"label", e.label},
                      {"n_params", e.n_params},
                      {"phi", e.phi},
                      {"criteria", crit},
                      {"overparametrized", any}});
  }
  return {{"models", models},
          {"thresholds",
           {{"accuracy_gain_min", thresholds.accuracy_gain_min},
            {"corr_limit", thresholds.corr_limit},
            {"cloud_size_limit", thresholds.cloud_size_limit}}}};
}

namespace {

bool type_matches(const nlohmann::json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "number") return v.is_number();
  if (type == "integer") return v.is_number_integer();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  return false;
}

bool check_schema(const nlohmann::json& doc, const nlohmann::json& schema,
                  const std::string& path, std::string* error) {
  auto fail = [&](const std::string& why) {
    if (error) *error = path + ": " + why;
    return false;
  };
  if (schema.contains("type")) {
    const std::string type = schema["type"].get<std::string>();
    if (!type_matches(doc, type)) return fail("expected type " + type);
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& e : schema["enum"]) found = found || e == doc;
    if (!found) return fail("value not in enum");
  }
  if (doc.is_number()) {
    if (schema.contains("minimum") && doc.get<double>() < schema["minimum"].get<double>()) {
      return fail("below minimum");
    }
    if (schema.contains("maximum") && doc.get<double>() > schema["maximum"].get<double>()) {
      return fail("above maximum");
    }
  }
  if (doc.is_object()) {
    if (schema.contains("required")) {
      for (const auto& k : schema["required"]) {
        if (!doc.contains(k.get<std::string>())) {
          return fail("missing required key '" + k.get<std::string>() + "'");
        }
      }
    }
    if (schema.contains("properties")) {
      for (const auto& [key, sub] : schema["properties"].items()) {
        if (doc.contains(key)) {
          if (!check_schema(doc[key], sub, path + "/" + key, error)) return false;
        }
      }
    }
  }
  if (doc.is_array() && schema.contains("items")) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (!check_schema(doc[i], schema["items"], path + "[" + std::to_string(i) + "]",
                        error)) {
        return false;
      }
    }
  }
  return true;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

}  // namespace

bool validate_against_schema(const nlohmann::json& doc,
                             const nlohmann::json& schema, std::string* error) {
  return check_schema(doc, schema, "#", error);
}

void write_cloud_csv(const ParameterCloud& cloud, const std::string& path) {
  CsvTable t;
  t.header.push_back("draw");
  for (const auto& n : cloud.parameter_names) t.header.push_back(n);
  t.header.push_back("distance");
  for (int j = 0; j < cloud.draws.rows(); ++j) {
    std::vector<double> row;
    row.push_back(j);
    for (int i = 0; i < cloud.draws.cols(); ++i) row.push_back(cloud.draws(j, i));
    row.push_back(cloud.distances[j]);
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

void write_correlation_csv(const Eigen::MatrixXd& corr,
                           const std::vector<std::string>& names,
                           const std::string& path) {
  if (corr.rows() != corr.cols() ||
      corr.rows() != static_cast<Eigen::Index>(names.size())) {
    throw ConfigError("correlation CSV: shape mismatch");
  }
  CsvTable t;
  t.header = names;
  for (int i = 0; i < corr.rows(); ++i) {
    std::vector<double> row(corr.cols());
    for (int j = 0; j < corr.cols(); ++j) row[j] = corr(i, j);
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

Eigen::MatrixXd read_correlation_csv(const std::string& path,
                                     std::vector<std::string>* names) {
  const CsvTable t = read_csv(path);
  const int n = static_cast<int>(t.header.size());
  if (static_cast<int>(t.rows.size()) != n) {
    throw ConfigError("correlation CSV is not square");
  }
  Eigen::MatrixXd corr(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) corr(i, j) = t.rows[i][j];
  }
  if (names) *names = t.header;
  return corr;
}

nlohmann::json cloud_summary_json(const ParameterCloud& cloud) {
  nlohmann::json j;
  j["cloud_size"] = cloud.size;
  j["n_draws"] = cloud.draws.rows();
  j["n_params"] = cloud.p_star.size();
  j["parameter_names"] = cloud.parameter_names;
  j["p_star"] = std::vector<double>(cloud.p_star.data(),
                                    cloud.p_star.data() + cloud.p_star.size());
  j["gradient_inf_norm"] = cloud.gradient_inf_norm;
  double max_off = 0.0;
  for (int i = 0; i < cloud.correlation.rows(); ++i) {
    for (int k = 0; k < cloud.correlation.cols(); ++k) {
      if (i != k) max_off = std::max(max_off, std::abs(cloud.correlation(i, k)));
    }
  }
  j["max_abs_offdiag_corr"] = max_off;
  if (!cloud.exact_audit.empty()) {
    nlohmann::json audit = nlohmann::json::array();
    for (const auto& e : cloud.exact_audit) {
      audit.push_back({{"draw", e.draw},
                       {"linearized", e.linearized},
                       {"exact", e.exact}});
    }
    j["exact_metric_audit"] = audit;
  }
  return j;
}

std::vector<std::string> emit_reports(const ReportInputs& inputs,
                                      const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;
  auto path_of = [&](const std::string& name) {
    return (std::filesystem::path(out_dir) / name).string();
  };

  for (std::size_t t = 0; t < inputs.fits.size(); ++t) {
    const FitSeries& f = inputs.fits[t];
    CsvTable tab;
    tab.header = {"cycle",   "exp_max", "exp_min",   "mod_max",
                  "mod_min", "resid_max", "resid_min"};
    for (std::size_t c = 0; c < f.exp_max.size(); ++c) {
      tab.rows.push_back({static_cast<double>(c + 1), f.exp_max[c], f.exp_min[c],
                          f.mod_max[c], f.mod_min[c], f.exp_max[c] - f.mod_max[c],
                          f.exp_min[c] - f.mod_min[c]});
    }
    const std::string p = path_of("fit_test" + std::to_string(t + 1) + ".csv");
    write_csv(p, tab);
    written.push_back(p);

    // Plot-ready two-column series, cycle vs strain.
    CsvTable pmax, pmin;
    pmax.header = {"cycle", "strain"};
    pmin.header = {"cycle", "strain"};
    for (std::size_t c = 0; c < f.mod_max.size(); ++c) {
      pmax.rows.push_back({static_cast<double>(c + 1), f.mod_max[c]});
      pmin.rows.push_back({static_cast<double>(c + 1), f.mod_min[c]});
    }
    const std::string p1 = path_of("plot_strain_max_test" + std::to_string(t + 1) + ".csv");
    const std::string p2 = path_of("plot_strain_min_test" + std::to_string(t + 1) + ".csv");
    write_csv(p1, pmax);
    write_csv(p2, pmin);
    written.push_back(p1);
    written.push_back(p2);
  }

  if (inputs.temperature_trace) {
    CsvTable tt;
    tt.header = {"time_s", "theta_K"};
    for (std::size_t i = 0; i < inputs.temperature_trace->size(); ++i) {
      tt.rows.push_back({inputs.temperature_trace->time[i],
                         inputs.temperature_trace->theta[i]});
    }
    const std::string p = path_of("plot_time_temperature.csv");
    write_csv(p, tt);
    written.push_back(p);
  }

  std::optional<double> max_corr;
  std::optional<double> csize;
  if (inputs.cloud) {
    const std::string pc = path_of("cloud.csv");
    write_cloud_csv(*inputs.cloud, pc);
    written.push_back(pc);
    const std::string pcorr = path_of("correlation.csv");
    write_correlation_csv(inputs.cloud->correlation, inputs.cloud->parameter_names,
                          pcorr);
    written.push_back(pcorr);
    const std::string ps = path_of("summary.json");
    const nlohmann::json summary = cloud_summary_json(*inputs.cloud);
    write_text(ps, summary.dump(2) + "\n");
    written.push_back(ps);
    max_corr = summary["max_abs_offdiag_corr"].get<double>();
    csize = inputs.cloud->size;
  }

  nlohmann::json fit = {{"label", inputs.model_label.empty() ? "model" : inputs.model_label},
                        {"n_params", inputs.n_params},
                        {"phi", inputs.phi}};
  fit["phi_val"] = inputs.phi_val ? nlohmann::json(*inputs.phi_val) : nlohmann::json();
  fit["max_abs_corr"] = max_corr ? nlohmann::json(*max_corr) : nlohmann::json();
  fit["cloud_size"] = csize ? nlohmann::json(*csize) : nlohmann::json();
  nlohmann::json diag = diagnose(nlohmann::json::array({fit}), inputs.thresholds);
  diag["config"] = inputs.config_echo;
  const std::string pd = path_of("diagnostics.json");
  write_text(pd, diag.dump(2) + "\n");
  written.push_back(pd);
  return written;
}

}  // namespace ratchet
