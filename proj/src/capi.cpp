// Copyright (c) the ratchet developers. See the top-level LICENSE file.
// SPDX-License-Identifier: Apache-2.0

#include "ratchet.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ratchet/errors.hpp"
#include "ratchet/identify.hpp"
#include "ratchet/loading.hpp"
#include "ratchet/material.hpp"
#include "ratchet/sensitivity.hpp"
#include "ratchet/simulate.hpp"
#include "ratchet/workbench.hpp"

using nlohmann::json;

struct rk_params {
  ratchet::MaterialParams v;
};
struct rk_program {
  ratchet::LoadingProgram v;
};
struct rk_trace {
  ratchet::SimulationTrace v;
};
struct rk_record {
  ratchet::ExperimentRecord v;
};
struct rk_problem {
  ratchet::IdentificationProblem v;
};
struct rk_cloud {
  ratchet::ParameterCloud v;
};

namespace {

thread_local std::string g_last_error;

rk_status fail(rk_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_json_arg(const char* text, const char* what) {
  if (text == nullptr || *text == '\0') return json::object();
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ratchet::ConfigError(std::string("invalid ") + what + " JSON: " + e.what());
  }
}

template <typename Fn>
rk_status guarded(Fn&& fn) {
  try {
    fn();
    return RK_OK;
  } catch (const ratchet::RankDeficientError& e) {
    return fail(RK_ERR_RANK_DEFICIENT, e.what());
  } catch (const ratchet::ConfigError& e) {
    return fail(RK_ERR_CONFIG, e.what());
  } catch (const ratchet::NumericalError& e) {
    return fail(RK_ERR_NUMERICAL, e.what());
  } catch (const std::ios_base::failure& e) {
    return fail(RK_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(RK_ERR_NUMERICAL, e.what());
  }
}

ratchet::SimOptions sim_options_arg(const char* options_json) {
  const json j = parse_json_arg(options_json, "simulation options");
  return ratchet::sim_options_from_json(j);
}

Eigen::VectorXd params_vector(const rk_problem* problem, const rk_params* p) {
  const ratchet::ParameterLayout layout = problem->v.layout();
  return layout.from_params(p->v);
}

}  // namespace

extern "C" {

const char* rk_version(void) { return "0.1.0"; }

const char* rk_last_error(void) { return g_last_error.c_str(); }

void rk_string_free(char* s) { std::free(s); }

rk_status rk_params_parse(const char* json_text, rk_params** out) {
  if (!json_text || !out) return fail(RK_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const json j = parse_json_arg(json_text, "parameter");
    *out = new rk_params{ratchet::params_from_json(j)};
  });
}

rk_status rk_params_load(const char* path, rk_params** out) {
  if (!path || !out) return fail(RK_ERR_ARGUMENT, "null argument");
  return guarded([&] { *out = new rk_params{ratchet::load_params(path)}; });
}

rk_status rk_params_save(const rk_params* p, const char* path) {
  if (!p || !path) return fail(RK_ERR_ARGUMENT, "null argument");
  return guarded([&] { ratchet::save_params(p->v, path); });
}

rk_status rk_params_dump(const rk_params* p, char** json_out) {
  if (!p || !json_out) return fail(RK_ERR_ARGUMENT, "null argument");
  return guarded([&] { *json_out = dup_string(ratchet::params_to_json(p->v).dump(2)); });
}

void rk_params_free(rk_params* p) { delete p; }

rk_status rk_program_experiment(const char* spec_json, rk_program** out) {
  if (!spec_json || !out) return fail(RK_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const json j = parse_json_arg(spec_json, "program spec");
    ratchet::StageDurations stages;
    stages.ramp = j.value("ramp_s", stages.ramp);
    stages.hold = j.value("hold_s", stages.hold);
    stages.period = j.value("period_s", stages.period);
    stages.unload = j.value("unload_s", stages.unload);
    *out = new rk_program{ratchet::make_experiment_program(
        j.at("sigma_m_MPa").get<double>(), j.at("sigma_a_max_MPa").get<double>(),
        j.at("n_cycles").get<int>(), stages,
        j.value("amplitude_start_frac", 0.05), j.value("ceiling_MPa", 2000.0))};
  });
}

rk_status rk_program_metric(const char* spec_json, rk_program** out) {
  if (!spec_json || !out) return fail(RK_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const json j = parse_json_arg(spec_json, "program spec");
    *out = new rk_program{ratchet::make_metric_program(
        j.at("n_cycles").get<int>(), j.at("sigma_max_MPa").get<double>(),
        j.value("period_s", 1.0))};
  });
}

rk_status rk_program_duration(const rk_program* p, double* out) {
  if (!p || !out) return fail(RK_ERR_ARGUMENT, "null argument");
  *out = p->v.duration();
  return RK_OK;
}

void rk_program_free(rk_program* p) { delete p; }

rk_status rk_simulate(const rk_params* p, const rk_program* prog,
                      const char* options_json, rk_trace** out) {
  if (!p || !prog || !out) return fail(RK_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new rk_trace{ratchet::integrate(p->v, prog->v, sim_options_arg(options_json))};
  });
}

rk_status rk_trace_write_csv(const rk_trace* t, const char* path) {
  if (!t || !path) return fail(RK_ERR_ARGUMENT, "null argument");
  return guarded([&] { ratchet::write_trace_csv(t->v, path); });
}

rk_status rk_trace_extract(const rk_trace* t, const rk_program* prog,
                           rk_record** out) {
  if (!t || !prog || !out) return fail(RK_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new rk_record{ratchet::extract_extrema(t->v, prog->v)};
  });
}

rk_status rk_trace_stats(const rk_trace* t, char** json_out) {
  if (!t || !json_out) return fail(RK_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const auto& d = t->v.diagnostics;
    json j = {{"nodes", t->v.size()},
              {"duration_s", t->v.time.empty() ? 0.0 : t->v.time.back()},
              {"final_s", t->v.s.empty() ? 0.0 : t->v.s.back()},
              {"final_eps11", t->v.eps11.empty() ? 0.0 : t->v.eps11.back()},
              {"final_theta_K", t->v.theta.empty() ? 0.0 : t->v.theta.back()},
              {"dissipation_J_per_kg",
               t->v.dissipation.empty() ? 0.0 : t->v.dissipation.back()},
              {"max_stress_residual_MPa", d.max_stress_residual},
              {"min_plastic_work_MPa", d.min_plastic_work},
              {"min_branch_work_MPa", d.min_branch_work},
              {"max_ow1_overshoot", d.max_ow1_overshoot},
              {"total_substeps", d.total_substeps}};
    *json_out = dup_string(j.dump(2));
  });
}

void rk_trace_free(rk_trace* t) { delete t; }

rk_status rk_record_load(const char* csv_path, rk_record** out) {
  if (!csv_path || !out) return fail(RK_ERR_ARGUMENT, "null argument");
  return guarded([&] { *out = new rk_record{ratchet::read_record_csv(csv_path)}; });
}

rk_status rk_record_save(const rk_record* r, const char* csv_path) {
  if (!r || !csv_path) return fail(RK_ERR_ARGUMENT, "null argument");
  return guarded([&] { ratchet::write_record_csv(r->v, csv_path); });
}

rk_status rk_record_info(const rk_record* r, char** json_out) {
  if (!r || !json_out) return fail(RK_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const auto& m = r->v.meta;
    json j = {{"n_cycles", r->v.n_cycles()},
              {"sigma_m_MPa", m.sigma_m},
              {"sigma_a_max_MPa", m.sigma_a_max},
              {"amplitude_start_MPa", m.amplitude_start},
              {"period_s", m.period},
              {"ramp_s", m.ramp_s},
              {"hold_s", m.hold_s},
              {"unload_s", m.unload_s},
              {"provenance", m.provenance.empty()
                                 ? json(nullptr)
                                 : json::parse(m.provenance)}};
    *json_out = dup_string(j.dump(2));
  });
}

void rk_record_free(rk_record* r) { delete r; }

rk_status rk_synth(const rk_params* p_true, const rk_program* prog,
                   const char* synth_json, const char* sim_options_json,
                   rk_record** out) {
  if (!p_true || !prog || !out) return fail(RK_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const ratchet::SynthConfig cfg =
        ratchet::synth_config_from_json(parse_json_arg(synth_json, "synth config"));
    *out = new rk_record{ratchet::generate_synthetic_experiment(
        p_true->v, prog->v, cfg, sim_options_arg(sim_options_json))};
  });
}

rk_status rk_problem_create(const rk_params* template_params,
                            const char* sim_options_json, rk_problem** out) {
  if (!template_params || !out) return fail(RK_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    auto* p = new rk_problem;
    p->v.template_params = template_params->v;
    p->v.sim_options = sim_options_arg(sim_options_json);
    *out = p;
  });
}

rk_status rk_problem_add_test(rk_problem* problem, const rk_program* prog,
                              const rk_record* rec) {
  if (!problem || !prog || !rec) return fail(RK_ERR_ARGUMENT, "null argument");
  return guarded([&] { problem->v.add_test(prog->v, rec->v); });
}

void rk_problem_free(rk_problem* p) { delete p; }

rk_status rk_identify(const rk_problem* problem, const rk_params* initial,
                      const char* options_json, rk_params** p_star_out,
                      char** report_json_out) {
  if (!problem || !initial || !p_star_out) {
    return fail(RK_ERR_ARGUMENT, "null argument");
  }
  return guarded([&] {
    const json j = parse_json_arg(options_json, "identify options");
    const ratchet::ParameterLayout layout = problem->v.layout();
    Eigen::VectorXd p = params_vector(problem, initial);

    bool run_nested = true;
    ratchet::NestedOptions nested;
    if (j.contains("nested")) {
      if (j["nested"].is_boolean()) {
        run_nested = j["nested"].get<bool>();
      } else {
        nested = ratchet::nested_options_from_json(j["nested"]);
      }
    }
    if (run_nested) p = ratchet::nested_identify(problem->v, p, nested);

    ratchet::RefineOptions ropts;
    if (j.contains("refine")) {
      const json& r = j["refine"];
      ropts.grad_tol = r.value("grad_tol", ropts.grad_tol);
      ropts.rel_step = r.value("rel_step", ropts.rel_step);
      ropts.lambda0 = r.value("lambda0", ropts.lambda0);
      ropts.max_iters = r.value("max_iters", ropts.max_iters);
      ropts.n_threads = r.value("n_threads", ropts.n_threads);
    }
    const ratchet::RefineResult res = ratchet::gauss_newton_refine(p, problem->v, ropts);

    *p_star_out = new rk_params{layout.to_params(res.p, problem->v.template_params)};
    if (report_json_out) {
      const Eigen::VectorXd mod = ratchet::model_response(res.p, problem->v);
      json report = {{"phi", res.phi},
                     {"gradient_inf_norm", res.grad_inf_norm},
                     {"lm_iterations", res.iters},
                     {"converged", res.converged},
                     {"parameter_names", layout.names()},
                     {"p_star", std::vector<double>(res.p.data(), res.p.data() + res.p.size())},
                     {"model_response", std::vector<double>(mod.data(), mod.data() + mod.size())}};
      *report_json_out = dup_string(report.dump(2));
    }
  });
}

rk_status rk_validate(const rk_problem* held_out, const rk_params* p_star,
                      char** report_json_out) {
  if (!held_out || !p_star || !report_json_out) {
    return fail(RK_ERR_ARGUMENT, "null argument");
  }
  return guarded([&] {
    const ratchet::ValidationResult res =
        ratchet::run_validation(params_vector(held_out, p_star), held_out->v);
    json j = {{"phi_val", res.phi}, {"empty", res.empty}};
    *report_json_out = dup_string(j.dump(2));
  });
}

rk_status rk_sensitivity_run(const rk_problem* problem, const rk_params* p_star,
                             const rk_program* metric_program,
                             const char* options_json, rk_cloud** out) {
  if (!problem || !p_star || !metric_program || !out) {
    return fail(RK_ERR_ARGUMENT, "null argument");
  }
  return guarded([&] {
    const ratchet::SensitivityOptions opts = ratchet::sensitivity_options_from_json(
        parse_json_arg(options_json, "sensitivity options"));
    *out = new rk_cloud{ratchet::run_sensitivity(
        problem->v, params_vector(problem, p_star), metric_program->v, opts)};
  });
}

rk_status rk_cloud_summary(const rk_cloud* cloud, char** json_out) {
  if (!cloud || !json_out) return fail(RK_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    *json_out = dup_string(ratchet::cloud_summary_json(cloud->v).dump(2));
  });
}

rk_status rk_cloud_write(const rk_cloud* cloud, const char* cloud_csv,
                         const char* corr_csv, const char* summary_json) {
  if (!cloud) return fail(RK_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    if (cloud_csv) ratchet::write_cloud_csv(cloud->v, cloud_csv);
    if (corr_csv) {
      ratchet::write_correlation_csv(cloud->v.correlation,
                                     cloud->v.parameter_names, corr_csv);
    }
    if (summary_json) {
      std::ofstream out(summary_json, std::ios::binary);
      if (!out) throw ratchet::ConfigError("cannot write summary JSON");
      out << ratchet::cloud_summary_json(cloud->v).dump(2) << "\n";
    }
  });
}

void rk_cloud_free(rk_cloud* c) { delete c; }

rk_status rk_correlate(const rk_problem* problem, const rk_params* p_star,
                       const char* options_json, const char* corr_csv_path,
                       char** summary_json_out) {
  if (!problem || !p_star || !corr_csv_path) {
    return fail(RK_ERR_ARGUMENT, "null argument");
  }
  return guarded([&] {
    const json j = parse_json_arg(options_json, "correlate options");
    const double rel_step = j.value("rel_step", 1e-5);
    const int n_threads = j.value("n_threads", 0);
    const Eigen::VectorXd p = params_vector(problem, p_star);
    const Eigen::MatrixXd J = ratchet::jacobian_fd(p, problem->v, rel_step, n_threads);
    const Eigen::MatrixXd corr = ratchet::correlation_matrix(J);
    const auto names = problem->v.layout().names();
    ratchet::write_correlation_csv(corr, names, corr_csv_path);
    if (summary_json_out) {
      double max_off = 0.0;
      for (int a = 0; a < corr.rows(); ++a) {
        for (int b = 0; b < corr.cols(); ++b) {
          if (a != b) max_off = std::max(max_off, std::abs(corr(a, b)));
        }
      }
      json out = {{"max_abs_offdiag_corr", max_off},
                  {"parameter_names", names}};
      *summary_json_out = dup_string(out.dump(2));
    }
  });
}

rk_status rk_diagnose(const char* fits_json, const char* thresholds_json,
                      char** diagnostics_json_out) {
  if (!fits_json || !diagnostics_json_out) {
    return fail(RK_ERR_ARGUMENT, "null argument");
  }
  return guarded([&] {
    const json fits = parse_json_arg(fits_json, "fits");
    const ratchet::DiagnosticsThresholds thr = ratchet::thresholds_from_json(
        parse_json_arg(thresholds_json, "thresholds"));
    *diagnostics_json_out = dup_string(ratchet::diagnose(fits, thr).dump(2));
  });
}

rk_status rk_schema_validate(const char* doc_json, const char* schema_json,
                             char** error_out) {
  if (!doc_json || !schema_json) return fail(RK_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const json doc = parse_json_arg(doc_json, "document");
    const json schema = parse_json_arg(schema_json, "schema");
    std::string err;
    if (!ratchet::validate_against_schema(doc, schema, &err)) {
      throw ratchet::ConfigError("schema validation failed: " + err);
    }
    if (error_out) *error_out = nullptr;
  });
}

}  // extern "C"
