// Copyright (c) the ratchet developers. See the top-level LICENSE file.
// SPDX-License-Identifier: Apache-2.0
//
// Batch CLI for the ratchet shared library. All heavy lifting happens in
// libratchet behind the C API; this binary parses flags, wires files
// together and maps rk_status values onto the documented exit codes
// (0 ok, 2 config error, 3 numerical failure, 4 overparametrization flag).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ratchet.h"

using nlohmann::json;

namespace {

int exit_code(rk_status st) {
  switch (st) {
    case RK_OK: return 0;
    case RK_ERR_ARGUMENT:
    case RK_ERR_CONFIG:
    case RK_ERR_IO: return 2;
    case RK_ERR_RANK_DEFICIENT: return 4;
    default: return 3;
  }
}

struct CliError {
  int code;
  std::string message;
};

void check(rk_status st, const std::string& what) {
  if (st != RK_OK) throw CliError{exit_code(st), what + ": " + rk_last_error()};
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  rk_string_free(s);
  return out;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError{2, "cannot open '" + path + "'"};
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw CliError{2, "cannot parse '" + path + "': " + e.what()};
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  if (const auto dir = std::filesystem::path(path).parent_path(); !dir.empty()) {
    std::filesystem::create_directories(dir);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError{2, "cannot write '" + path + "'"};
  out << text;
}

// Handle wrappers so error paths cannot leak.
using ParamsPtr = std::unique_ptr<rk_params, decltype(&rk_params_free)>;
using ProgramPtr = std::unique_ptr<rk_program, decltype(&rk_program_free)>;
using TracePtr = std::unique_ptr<rk_trace, decltype(&rk_trace_free)>;
using RecordPtr = std::unique_ptr<rk_record, decltype(&rk_record_free)>;
using ProblemPtr = std::unique_ptr<rk_problem, decltype(&rk_problem_free)>;
using CloudPtr = std::unique_ptr<rk_cloud, decltype(&rk_cloud_free)>;

ParamsPtr load_params(const std::string& path) {
  rk_params* p = nullptr;
  check(rk_params_load(path.c_str(), &p), "loading parameters");
  return {p, rk_params_free};
}

RecordPtr load_record(const std::string& path) {
  rk_record* r = nullptr;
  check(rk_record_load(path.c_str(), &r), "loading record '" + path + "'");
  return {r, rk_record_free};
}

// Rebuild the experiment program a record was measured under.
ProgramPtr program_for_record(const rk_record* rec) {
  char* info_raw = nullptr;
  check(rk_record_info(rec, &info_raw), "reading record metadata");
  const json info = json::parse(take_string(info_raw));
  const json spec = {{"sigma_m_MPa", info["sigma_m_MPa"]},
                     {"sigma_a_max_MPa", info["sigma_a_max_MPa"]},
                     {"n_cycles", info["n_cycles"]},
                     {"period_s", info["period_s"]},
                     {"ramp_s", info["ramp_s"]},
                     {"hold_s", info["hold_s"]},
                     {"unload_s", info["unload_s"]},
                     {"amplitude_start_frac",
                      info["sigma_a_max_MPa"].get<double>() > 0.0
                          ? info["amplitude_start_MPa"].get<double>() /
                                info["sigma_a_max_MPa"].get<double>()
                          : 0.0}};
  rk_program* prog = nullptr;
  check(rk_program_experiment(spec.dump().c_str(), &prog), "rebuilding program");
  return {prog, rk_program_free};
}

struct ProblemBundle {
  ProblemPtr problem{nullptr, rk_problem_free};
  ParamsPtr template_params{nullptr, rk_params_free};
  std::vector<std::string> record_paths;
};

// problem JSON: {"template_params": path, "records": [csv...]}
ProblemBundle load_problem(const json& cfg, const json& sim_options) {
  if (!cfg.contains("template_params") || !cfg.contains("records")) {
    throw CliError{2, "problem config needs 'template_params' and 'records'"};
  }
  ProblemBundle out;
  out.template_params = load_params(cfg["template_params"].get<std::string>());
  rk_problem* prob = nullptr;
  check(rk_problem_create(out.template_params.get(), sim_options.dump().c_str(), &prob),
        "creating problem");
  out.problem = ProblemPtr{prob, rk_problem_free};
  for (const auto& rec_path : cfg["records"]) {
    const std::string path = rec_path.get<std::string>();
    out.record_paths.push_back(path);
    RecordPtr rec = load_record(path);
    ProgramPtr prog = program_for_record(rec.get());
    check(rk_problem_add_test(prob, prog.get(), rec.get()), "adding test");
  }
  return out;
}

json merged(const json& config, const char* key) {
  return config.contains(key) ? config[key] : json::object();
}

ProgramPtr metric_program_from(const json& spec) {
  json m = spec;
  if (!m.contains("n_cycles")) m["n_cycles"] = 16;
  if (!m.contains("sigma_max_MPa")) m["sigma_max_MPa"] = 875.0;
  if (!m.contains("period_s")) m["period_s"] = 1.0;
  rk_program* prog = nullptr;
  check(rk_program_metric(m.dump().c_str(), &prog), "building metric program");
  return {prog, rk_program_free};
}

// Writes the per-cycle fit CSVs next to the identify outputs.
void write_fit_reports(const json& report, const ProblemBundle& bundle,
                       const std::string& fit_dir) {
  std::filesystem::create_directories(fit_dir);
  const auto& mod = report["model_response"];
  std::size_t offset = 0;
  for (std::size_t t = 0; t < bundle.record_paths.size(); ++t) {
    RecordPtr rec = load_record(bundle.record_paths[t]);
    char* info_raw = nullptr;
    check(rk_record_info(rec.get(), &info_raw), "record metadata");
    const json info = json::parse(take_string(info_raw));
    const int n_cycles = info["n_cycles"].get<int>();

    // Reread the raw CSV for the experimental values.
    std::ifstream in(bundle.record_paths[t]);
    std::string line;
    std::getline(in, line);  // header
    std::ostringstream fit;
    fit << "cycle,exp_max,exp_min,mod_max,mod_min,resid_max,resid_min\n";
    for (int c = 0; c < n_cycles; ++c) {
      std::getline(in, line);
      std::stringstream ls(line);
      std::string cell;
      std::getline(ls, cell, ',');
      std::getline(ls, cell, ',');
      const double exp_max = std::stod(cell);
      std::getline(ls, cell, ',');
      const double exp_min = std::stod(cell);
      const double mod_max = mod[offset + 2 * c].get<double>();
      const double mod_min = mod[offset + 2 * c + 1].get<double>();
      char buf[256];
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                    c + 1, exp_max, exp_min, mod_max, mod_min, exp_max - mod_max,
                    exp_min - mod_min);
      fit << buf;
    }
    offset += 2 * static_cast<std::size_t>(n_cycles);
    write_text_file(
        (std::filesystem::path(fit_dir) / ("fit_test" + std::to_string(t + 1) + ".csv"))
            .string(),
        fit.str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ratchet: cyclic-plasticity simulation, identification and "
               "error-sensitivity analysis"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON file with default options");

  // synth ------------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate a synthetic experiment record");
  std::string sy_params, sy_out;
  double sy_sigma_m = 420.0, sy_sigma_a = 470.0, sy_period = 1.0, sy_ramp = 60.0,
         sy_hold = 60.0, sy_unload = 30.0, sy_amp_frac = 0.05, sy_noise_sigma = 0.0;
  int sy_cycles = 2400, sy_draw = -1, sy_dim_offset = 0;
  synth->add_option("--params", sy_params, "ground-truth parameter JSON")->required();
  synth->add_option("--out", sy_out, "output record CSV")->required();
  auto* sy_sm = synth->add_option("--sigma-m", sy_sigma_m, "mean stress, MPa");
  auto* sy_sa = synth->add_option("--sigma-a-max", sy_sigma_a, "final amplitude, MPa");
  auto* sy_nc = synth->add_option("--cycles", sy_cycles, "cyclic stage cycles");
  synth->add_option("--period-s", sy_period);
  synth->add_option("--ramp-s", sy_ramp);
  synth->add_option("--hold-s", sy_hold);
  synth->add_option("--unload-s", sy_unload);
  synth->add_option("--amplitude-start-frac", sy_amp_frac);
  synth->add_option("--noise-sigma", sy_noise_sigma, "mode coefficient std dev");
  synth->add_option("--draw", sy_draw, "Sobol draw index (-1: clean)");
  synth->add_option("--dim-offset", sy_dim_offset, "first Sobol dimension");

  // simulate ---------------------------------------------------------------
  auto* simulate = app.add_subcommand("simulate", "integrate one loading program");
  std::string si_params, si_out;
  bool si_metric = false, si_thermal = false;
  double si_sigma_m = 420.0, si_sigma_a = 470.0;
  int si_cycles = 2400;
  simulate->add_option("--params", si_params)->required();
  simulate->add_option("--out", si_out, "output trace CSV")->required();
  simulate->add_flag("--metric", si_metric, "use the metric program");
  simulate->add_flag("--thermal", si_thermal, "evolve temperature");
  simulate->add_option("--sigma-m", si_sigma_m);
  simulate->add_option("--sigma-a-max", si_sigma_a);
  simulate->add_option("--cycles", si_cycles);

  // identify ---------------------------------------------------------------
  auto* identify = app.add_subcommand("identify", "identify material parameters");
  std::string id_problem, id_init, id_out, id_report, id_fit_dir;
  identify->add_option("--problem", id_problem, "problem JSON")->required();
  identify->add_option("--init", id_init, "initial parameter JSON")->required();
  identify->add_option("--out", id_out, "identified parameter JSON")->required();
  identify->add_option("--report", id_report, "fit report JSON");
  identify->add_option("--fit-dir", id_fit_dir, "directory for per-cycle fit CSVs");

  // validate ---------------------------------------------------------------
  auto* validate = app.add_subcommand("validate", "evaluate phi on held-out data");
  std::string va_problem, va_params, va_out;
  validate->add_option("--problem", va_problem)->required();
  validate->add_option("--params", va_params)->required();
  validate->add_option("--out", va_out, "validation report JSON");

  // sensitivity --------------------------------------------------------------
  auto* sensitivity = app.add_subcommand(
      "sensitivity", "quasi-Monte-Carlo error-sensitivity analysis");
  std::string se_problem, se_params, se_out_dir;
  int se_exact = -1;
  sensitivity->add_option("--problem", se_problem)->required();
  sensitivity->add_option("--params", se_params, "zero-gradient optimum JSON")->required();
  sensitivity->add_option("--out-dir", se_out_dir)->required();
  sensitivity->add_option("--exact-metric", se_exact,
                          "audit the first N draws with the full-simulation metric");

  // correlate ----------------------------------------------------------------
  auto* correlate = app.add_subcommand("correlate", "correlation matrix at p*");
  std::string co_problem, co_params, co_out, co_summary;
  correlate->add_option("--problem", co_problem)->required();
  correlate->add_option("--params", co_params)->required();
  correlate->add_option("--out", co_out, "correlation CSV")->required();
  correlate->add_option("--summary", co_summary, "summary JSON");

  // diagnose -----------------------------------------------------------------
  auto* diagnose = app.add_subcommand("diagnose", "overparametrization report");
  std::string dg_fits, dg_out, dg_schema;
  diagnose->add_option("--fits", dg_fits, "per-model fit summary JSON")->required();
  diagnose->add_option("--out", dg_out, "diagnostics JSON")->required();
  diagnose->add_option("--schema", dg_schema, "validate the output against this schema");

  CLI11_PARSE(app, argc, argv);

  try {
    json config = json::object();
    if (!config_path.empty()) config = load_json_file(config_path);
    const json sim_options = merged(config, "sim_options");

    if (synth->parsed()) {
      // Flag defaults fall back to the config's program block.
      const json prog_cfg = merged(config, "program");
      if (!*sy_sm && prog_cfg.contains("sigma_m_MPa")) sy_sigma_m = prog_cfg["sigma_m_MPa"];
      if (!*sy_sa && prog_cfg.contains("sigma_a_max_MPa"))
        sy_sigma_a = prog_cfg["sigma_a_max_MPa"];
      if (!*sy_nc && prog_cfg.contains("n_cycles")) sy_cycles = prog_cfg["n_cycles"];

      ParamsPtr params = load_params(sy_params);
      const json spec = {{"sigma_m_MPa", sy_sigma_m},
                         {"sigma_a_max_MPa", sy_sigma_a},
                         {"n_cycles", sy_cycles},
                         {"period_s", sy_period},
                         {"ramp_s", sy_ramp},
                         {"hold_s", sy_hold},
                         {"unload_s", sy_unload},
                         {"amplitude_start_frac", sy_amp_frac}};
      rk_program* prog_raw = nullptr;
      check(rk_program_experiment(spec.dump().c_str(), &prog_raw), "building program");
      ProgramPtr prog{prog_raw, rk_program_free};

      json synth_cfg = merged(config, "synth");
      if (sy_noise_sigma > 0.0) synth_cfg["noise"]["sigma"] = sy_noise_sigma;
      if (sy_draw >= 0) synth_cfg["draw_index"] = sy_draw;
      if (sy_dim_offset > 0) synth_cfg["dim_offset"] = sy_dim_offset;

      rk_record* rec_raw = nullptr;
      check(rk_synth(params.get(), prog.get(), synth_cfg.dump().c_str(),
                     sim_options.dump().c_str(), &rec_raw),
            "synthesizing record");
      RecordPtr rec{rec_raw, rk_record_free};
      check(rk_record_save(rec.get(), sy_out.c_str()), "writing record");
      std::cout << "wrote " << sy_out << "\n";
    }

    if (simulate->parsed()) {
      ParamsPtr params = load_params(si_params);
      json sim = sim_options;
      if (si_thermal) sim["thermal"] = true;
      ProgramPtr prog{nullptr, rk_program_free};
      if (si_metric) {
        prog = metric_program_from(merged(config, "metric_program"));
      } else {
        const json spec = {{"sigma_m_MPa", si_sigma_m},
                           {"sigma_a_max_MPa", si_sigma_a},
                           {"n_cycles", si_cycles}};
        rk_program* p = nullptr;
        check(rk_program_experiment(spec.dump().c_str(), &p), "building program");
        prog = ProgramPtr{p, rk_program_free};
      }
      rk_trace* trace_raw = nullptr;
      check(rk_simulate(params.get(), prog.get(), sim.dump().c_str(), &trace_raw),
            "simulating");
      TracePtr trace{trace_raw, rk_trace_free};
      check(rk_trace_write_csv(trace.get(), si_out.c_str()), "writing trace");
      char* stats_raw = nullptr;
      check(rk_trace_stats(trace.get(), &stats_raw), "trace stats");
      std::cout << take_string(stats_raw) << "\n";
    }

    if (identify->parsed()) {
      ProblemBundle bundle = load_problem(load_json_file(id_problem), sim_options);
      ParamsPtr init = load_params(id_init);
      const json opts = merged(config, "identify");
      rk_params* p_star_raw = nullptr;
      char* report_raw = nullptr;
      check(rk_identify(bundle.problem.get(), init.get(), opts.dump().c_str(),
                        &p_star_raw, &report_raw),
            "identification");
      ParamsPtr p_star{p_star_raw, rk_params_free};
      const json report = json::parse(take_string(report_raw));
      check(rk_params_save(p_star.get(), id_out.c_str()), "writing parameters");
      if (!id_report.empty()) write_text_file(id_report, report.dump(2) + "\n");
      if (!id_fit_dir.empty()) write_fit_reports(report, bundle, id_fit_dir);
      std::cout << "phi = " << report["phi"].get<double>()
                << ", scaled |grad|_inf = " << report["gradient_inf_norm"].get<double>()
                << "\n";
    }

    if (validate->parsed()) {
      ProblemBundle bundle = load_problem(load_json_file(va_problem), sim_options);
      ParamsPtr params = load_params(va_params);
      char* report_raw = nullptr;
      check(rk_validate(bundle.problem.get(), params.get(), &report_raw), "validation");
      const std::string report = take_string(report_raw);
      if (!va_out.empty()) write_text_file(va_out, report + "\n");
      std::cout << report << "\n";
    }

    if (sensitivity->parsed()) {
      ProblemBundle bundle = load_problem(load_json_file(se_problem), sim_options);
      ParamsPtr params = load_params(se_params);
      ProgramPtr metric = metric_program_from(merged(config, "metric_program"));
      json opts = merged(config, "sensitivity");
      if (se_exact >= 0) opts["exact_metric_subsample"] = se_exact;
      rk_cloud* cloud_raw = nullptr;
      check(rk_sensitivity_run(bundle.problem.get(), params.get(), metric.get(),
                               opts.dump().c_str(), &cloud_raw),
            "sensitivity analysis");
      CloudPtr cloud{cloud_raw, rk_cloud_free};
      std::filesystem::create_directories(se_out_dir);
      const auto dir = std::filesystem::path(se_out_dir);
      check(rk_cloud_write(cloud.get(), (dir / "cloud.csv").string().c_str(),
                           (dir / "correlation.csv").string().c_str(),
                           (dir / "summary.json").string().c_str()),
            "writing sensitivity outputs");
      char* summary_raw = nullptr;
      check(rk_cloud_summary(cloud.get(), &summary_raw), "summary");
      const json summary = json::parse(take_string(summary_raw));
      std::cout << "cloud size = " << summary["cloud_size"].get<double>() << " ("
                << summary["n_draws"].get<int>() << " draws)\n";
    }

    if (correlate->parsed()) {
      ProblemBundle bundle = load_problem(load_json_file(co_problem), sim_options);
      ParamsPtr params = load_params(co_params);
      char* summary_raw = nullptr;
      check(rk_correlate(bundle.problem.get(), params.get(),
                         merged(config, "sensitivity").dump().c_str(), co_out.c_str(),
                         &summary_raw),
            "correlation");
      const std::string summary = take_string(summary_raw);
      if (!co_summary.empty()) write_text_file(co_summary, summary + "\n");
      std::cout << summary << "\n";
    }

    if (diagnose->parsed()) {
      const json fits = load_json_file(dg_fits);
      const json thresholds = merged(config, "thresholds");
      char* out_raw = nullptr;
      check(rk_diagnose(fits.dump().c_str(), thresholds.dump().c_str(), &out_raw),
            "diagnosis");
      const std::string report = take_string(out_raw);
      write_text_file(dg_out, report + "\n");
      if (!dg_schema.empty()) {
        const json schema = load_json_file(dg_schema);
        char* err = nullptr;
        check(rk_schema_validate(report.c_str(), schema.dump().c_str(), &err),
              "schema validation");
      }
      std::cout << "wrote " << dg_out << "\n";
    }
    return 0;
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
