/* Copyright (c) the ratchet developers. See the top-level LICENSE file.
 * SPDX-License-Identifier: Apache-2.0
 *
 * C API of the ratchet library: stress-controlled cyclic plasticity
 * simulation, material parameter identification and quasi-Monte-Carlo
 * error-sensitivity analysis.
 *
 * All functions return rk_status; RK_OK is zero. On failure,
 * rk_last_error() describes the problem (thread-local). Objects are opaque
 * handles owned by the caller and released with the matching _free call.
 * Structured options are passed as JSON text; see the README for schemas.
 */

#ifndef RATCHET_H
#define RATCHET_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined _WIN32
#define RK_API __declspec(dllexport)
#else
#define RK_API __attribute__((visibility("default")))
#endif

typedef enum rk_status {
  RK_OK = 0,
  RK_ERR_ARGUMENT = 1,       /* null handle / bad call */
  RK_ERR_CONFIG = 2,         /* invalid parameters, options or files */
  RK_ERR_NUMERICAL = 3,      /* solver failure */
  RK_ERR_RANK_DEFICIENT = 4, /* overparametrization hard flag */
  RK_ERR_IO = 5              /* file system failure */
} rk_status;

typedef struct rk_params rk_params;   /* material parameter set */
typedef struct rk_program rk_program; /* stress-controlled loading program */
typedef struct rk_trace rk_trace;     /* simulation trace */
typedef struct rk_record rk_record;   /* per-cycle extrema record */
typedef struct rk_problem rk_problem; /* identification problem */
typedef struct rk_cloud rk_cloud;     /* sensitivity result */

RK_API const char* rk_version(void);
RK_API const char* rk_last_error(void);
RK_API void rk_string_free(char* s);

/* ---- material parameters (JSON schema in the README) ---- */
RK_API rk_status rk_params_parse(const char* json_text, rk_params** out);
RK_API rk_status rk_params_load(const char* path, rk_params** out);
RK_API rk_status rk_params_save(const rk_params* p, const char* path);
RK_API rk_status rk_params_dump(const rk_params* p, char** json_out);
RK_API void rk_params_free(rk_params* p);

/* ---- loading programs ----
 * experiment spec: {sigma_m_MPa, sigma_a_max_MPa, n_cycles, ramp_s, hold_s,
 *                   period_s, unload_s, amplitude_start_frac, ceiling_MPa}
 * metric spec:     {n_cycles, sigma_max_MPa, period_s}
 */
RK_API rk_status rk_program_experiment(const char* spec_json, rk_program** out);
RK_API rk_status rk_program_metric(const char* spec_json, rk_program** out);
RK_API rk_status rk_program_duration(const rk_program* p, double* out);
RK_API void rk_program_free(rk_program* p);

/* ---- simulation ---- */
RK_API rk_status rk_simulate(const rk_params* p, const rk_program* prog,
                             const char* options_json, rk_trace** out);
RK_API rk_status rk_trace_write_csv(const rk_trace* t, const char* path);
RK_API rk_status rk_trace_extract(const rk_trace* t, const rk_program* prog,
                                  rk_record** out);
RK_API rk_status rk_trace_stats(const rk_trace* t, char** json_out);
RK_API void rk_trace_free(rk_trace* t);

/* ---- records (CSV `cycle,max_strain,min_strain` + .meta.json sidecar) ---- */
RK_API rk_status rk_record_load(const char* csv_path, rk_record** out);
RK_API rk_status rk_record_save(const rk_record* r, const char* csv_path);
RK_API rk_status rk_record_info(const rk_record* r, char** json_out);
RK_API void rk_record_free(rk_record* r);

/* Synthetic experiment: simulate p_true, extract extrema, optionally apply
 * one Sobol-driven noise draw. synth spec: {noise: {sigma, n_modes},
 * sobol: {...}, draw_index, dim_offset}. */
RK_API rk_status rk_synth(const rk_params* p_true, const rk_program* prog,
                          const char* synth_json, const char* sim_options_json,
                          rk_record** out);

/* ---- identification ---- */
RK_API rk_status rk_problem_create(const rk_params* template_params,
                                   const char* sim_options_json,
                                   rk_problem** out);
RK_API rk_status rk_problem_add_test(rk_problem* problem, const rk_program* prog,
                                     const rk_record* rec);
RK_API void rk_problem_free(rk_problem* p);

/* Nested Nelder-Mead identification followed by Levenberg-Marquardt
 * refinement. options: {nested: {...}|false, refine: {...}}. The report JSON
 * carries phi, gradient norm, iteration counts and the model extrema. */
RK_API rk_status rk_identify(const rk_problem* problem, const rk_params* initial,
                             const char* options_json, rk_params** p_star_out,
                             char** report_json_out);

RK_API rk_status rk_validate(const rk_problem* held_out, const rk_params* p_star,
                             char** report_json_out);

/* ---- sensitivity ---- */
RK_API rk_status rk_sensitivity_run(const rk_problem* problem,
                                    const rk_params* p_star,
                                    const rk_program* metric_program,
                                    const char* options_json, rk_cloud** out);
RK_API rk_status rk_cloud_summary(const rk_cloud* cloud, char** json_out);
RK_API rk_status rk_cloud_write(const rk_cloud* cloud, const char* cloud_csv,
                                const char* corr_csv, const char* summary_json);
RK_API void rk_cloud_free(rk_cloud* c);

/* Correlation matrix of the identification Jacobian at p_star, written as
 * CSV; summary JSON reports the maximum off-diagonal magnitude. */
RK_API rk_status rk_correlate(const rk_problem* problem, const rk_params* p_star,
                              const char* options_json, const char* corr_csv_path,
                              char** summary_json_out);

/* ---- diagnostics ---- */
RK_API rk_status rk_diagnose(const char* fits_json, const char* thresholds_json,
                             char** diagnostics_json_out);
RK_API rk_status rk_schema_validate(const char* doc_json, const char* schema_json,
                                    char** error_out);

#ifdef __cplusplus
}
#endif

#endif /* RATCHET_H */
