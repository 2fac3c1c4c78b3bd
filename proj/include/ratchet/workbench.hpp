// Copyright (c) the ratchet developers. See the top-level LICENSE file.
// SPDX-License-Identifier: Apache-2.0

#ifndef RATCHET_WORKBENCH_HPP
#define RATCHET_WORKBENCH_HPP

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ratchet/sensitivity.hpp"

namespace ratchet {

struct SynthConfig {
  NoiseModel noise;
  SobolConfig sobol;     // all randomness flows from here
  int draw_index = -1;   // < 0: clean record, no noise applied
  int dim_offset = 0;    // first Sobol dimension used for this record's modes
};

SynthConfig synth_config_from_json(const nlohmann::json& j);

// Simulates p_true under the program, extracts the per-cycle extrema and
// optionally applies one draw of the stochastic noise model. Provenance
// (p_true, noise settings) is recorded in the record metadata.
ExperimentRecord generate_synthetic_experiment(const MaterialParams& p_true,
                                               const LoadingProgram& program,
                                               const SynthConfig& cfg,
                                               const SimOptions& opts = {});

struct ValidationResult {
  double phi = 0.0;
  bool empty = false;  // flagged: no held-out data supplied
};

// Error functional on held-out data only.
ValidationResult run_validation(const Eigen::VectorXd& p_star,
                                const IdentificationProblem& held_out);

struct DiagnosticsThresholds {
  double accuracy_gain_min = 0.05;  // criterion I: relative Phi improvement
  double corr_limit = 0.999;        // criterion III
  double cloud_size_limit = 1e-3;   // criterion IV
};

DiagnosticsThresholds thresholds_from_json(const nlohmann::json& j);

// Assembles the overparametrization report from per-model fit summaries.
// `fits` is an array of {label, n_params, phi, phi_val?, max_abs_corr?,
// cloud_size?} objects, ordered or not; entries are sorted by n_params.
nlohmann::json diagnose(const nlohmann::json& fits,
                        const DiagnosticsThresholds& thresholds);

// Minimal structural JSON-schema check (type / required / properties /
// items / enum / minimum / maximum). Returns true when `doc` conforms.
bool validate_against_schema(const nlohmann::json& doc,
                             const nlohmann::json& schema, std::string* error);

struct FitSeries {
  std::vector<double> exp_max, exp_min, mod_max, mod_min;
};

struct ReportInputs {
  const ParameterCloud* cloud = nullptr;
  std::vector<FitSeries> fits;  // one per test
  double phi = 0.0;
  std::optional<double> phi_val;
  const SimulationTrace* temperature_trace = nullptr;
  nlohmann::json config_echo;
  DiagnosticsThresholds thresholds;
  std::string model_label;
  int n_params = 0;
};

// Writes fit CSVs, cloud CSV, correlation CSV, diagnostics JSON and the
// plot-ready two-column series; returns the paths written. Deterministic:
// identical inputs produce byte-identical files.
std::vector<std::string> emit_reports(const ReportInputs& inputs,
                                      const std::string& out_dir);

void write_cloud_csv(const ParameterCloud& cloud, const std::string& path);
void write_correlation_csv(const Eigen::MatrixXd& corr,
                           const std::vector<std::string>& names,
                           const std::string& path);
Eigen::MatrixXd read_correlation_csv(const std::string& path,
                                     std::vector<std::string>* names = nullptr);
nlohmann::json cloud_summary_json(const ParameterCloud& cloud);

}  // namespace ratchet

#endif
