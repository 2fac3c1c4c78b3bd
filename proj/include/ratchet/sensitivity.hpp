// Copyright (c) the ratchet developers. See the top-level LICENSE file.
// SPDX-License-Identifier: Apache-2.0

#ifndef RATCHET_SENSITIVITY_HPP
#define RATCHET_SENSITIVITY_HPP

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "ratchet/identify.hpp"

namespace ratchet {

struct SobolConfig {
  int dimensions = 40;  // n_modes x n_tests; must be even (Box-Muller pairs)
  long skip = 1000;     // initial points omitted from the sequence
  // Points omitted between consecutive draws (stride leap + 1). Leaping
  // breaks the digital-net equidistribution of base-2 nets in some
  // dimensions, so the default keeps the draws contiguous; see the README.
  long leap = 0;
  int n_draws = 10000;
  bool antithetic = false;  // second half of the draws = negated first half
};

SobolConfig sobol_config_from_json(const nlohmann::json& j);
nlohmann::json sobol_config_to_json(const SobolConfig& c);

// Direction-number Sobol sequence (Bratley-Fox initialization, 40 supported
// dimensions). Points are randomly accessible by index.
class SobolSequence {
 public:
  static constexpr int kMaxDimensions = 40;

  explicit SobolSequence(int dimensions);
  int dimensions() const { return dimensions_; }
  // Writes the uniform point with 0-based sequence index into out[0..dim).
  void point(std::uint64_t index, std::span<double> out) const;

 private:
  int dimensions_;
  std::vector<std::uint32_t> v_;  // direction integers, dim-major
};

// n_draws x dimensions matrix of (quasi-random) standard normals:
// Sobol uniforms pushed through Box-Muller on consecutive dimension pairs.
// Deterministic for a fixed config, independent of thread count.
Eigen::MatrixXd sobol_normals(const SobolConfig& cfg);

struct NoiseModel {
  double sigma = 1e-6;  // std deviation of the mode coefficients
  int n_modes = 20;     // per test
};

NoiseModel noise_model_from_json(const nlohmann::json& j);
nlohmann::json noise_model_to_json(const NoiseModel& m);

// Mode matrix of one record: entry (i, k) = sin((k+1) pi t_i / T) with t_i
// the stress-turning-point time of data point i (max/min interleaved) and T
// the cyclic-stage duration.
Eigen::MatrixXd noise_mode_matrix(const ExperimentRecord& record, int n_modes);

// Noise vector sum_k coeffs[k] * Mode_k(t_i) for one record.
Eigen::VectorXd synthesize_noise(std::span<const double> coeffs,
                                 const ExperimentRecord& record);

// Linearized refit of the noisy objective around a zero-gradient optimum:
// p(noise) = p* + (R^T R)^{-1} R^T Q^T noise with J = Q R. The base residual
// term vanishes by the zero-gradient precondition, which the constructor
// verifies from (exp, mod_at_star); this makes the refit exactly linear in
// the noise and exact at zero noise.
class FastRefit {
 public:
  FastRefit(const Eigen::MatrixXd& J, const Eigen::VectorXd& p_star,
            const Eigen::VectorXd& mod_at_star, const Eigen::VectorXd& exp_vector,
            double rank_tol = 1e-12);

  // Parameter shift p(noise) - p*, exactly linear in the noise (QR path).
  Eigen::VectorXd refit_delta(const Eigen::VectorXd& noise) const;
  Eigen::VectorXd refit(const Eigen::VectorXd& noise) const;  // p* + delta
  // Independent route through the normal equations (J^T J) p = J^T A, solved
  // with a locally implemented Cholesky factorization.
  Eigen::VectorXd refit_delta_normal_equations(const Eigen::VectorXd& noise) const;
  Eigen::VectorXd refit_normal_equations(const Eigen::VectorXd& noise) const;

  double gradient_inf_norm() const { return gradient_inf_norm_; }
  const Eigen::MatrixXd& thin_q() const { return q_; }
  const Eigen::MatrixXd& r() const { return r_; }

 private:
  Eigen::VectorXd p_star_;
  Eigen::MatrixXd q_;  // N x n
  Eigen::MatrixXd r_;  // n x n upper triangular
  Eigen::MatrixXd normal_;          // J^T J
  Eigen::MatrixXd normal_chol_;     // lower Cholesky factor of J^T J
  Eigen::MatrixXd jt_;              // J^T
  double gradient_inf_norm_ = 0.0;  // parameter-scaled, from (exp, mod)
};

Eigen::VectorXd fast_refit(const FastRefit& op, const Eigen::VectorXd& noise);

// Mechanics-based metric: sup-norm discrepancy of the axial strain
// trajectories under the shared metric program (full simulation).
double mechanics_distance(const Eigen::VectorXd& p1, const Eigen::VectorXd& p2,
                          const LoadingProgram& metric_program,
                          const MaterialParams& params_template,
                          const SimOptions& opts);

// d eps11(t)/dp at p_star on the metric-program grid (central differences),
// one column per parameter.
Eigen::MatrixXd strain_sensitivity(const Eigen::VectorXd& p_star,
                                   const LoadingProgram& metric_program,
                                   const MaterialParams& params_template,
                                   const SimOptions& opts, double rel_step = 1e-5,
                                   int n_threads = 0);

// max_t | d_eps_dp(t) . dp |
double linearized_distance(const Eigen::MatrixXd& d_eps_dp,
                           const Eigen::VectorXd& dp);

// Mean linearized distance from p_star over the draws (fixed-order sum).
double cloud_size(const Eigen::VectorXd& p_star, const Eigen::MatrixXd& draws,
                  const Eigen::MatrixXd& d_eps_dp);

// Corr_ij = P_ij / sqrt(P_ii P_jj), P = J^T J. Zero columns are reported.
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& J);

inline SimOptions metric_sim_defaults() {
  SimOptions o;
  o.ramp_steps = 40;
  return o;
}

struct SensitivityOptions {
  NoiseModel noise;
  SobolConfig sobol;
  SimOptions metric_sim = metric_sim_defaults();
  double rel_step = 1e-5;
  double rank_tol = 1e-12;
  int n_threads = 0;
  int exact_metric_subsample = 0;  // audit the first k draws with Eq.-exact metric
};

SensitivityOptions sensitivity_options_from_json(const nlohmann::json& j);

struct ExactAuditEntry {
  int draw = 0;
  double linearized = 0.0;
  double exact = 0.0;
};

struct ParameterCloud {
  Eigen::VectorXd p_star;
  Eigen::MatrixXd draws;      // n_draws x n, p* + delta
  Eigen::MatrixXd deltas;     // n_draws x n, exactly linear in the noise
  Eigen::VectorXd distances;  // linearized metric, per draw
  double size = 0.0;
  Eigen::MatrixXd correlation;
  double gradient_inf_norm = 0.0;
  std::vector<ExactAuditEntry> exact_audit;
  std::vector<std::string> parameter_names;
};

// End-to-end quasi-Monte-Carlo sensitivity pipeline: one Jacobian, one QR,
// N_noise linearized refits, per-draw distances, cloud size, correlations.
ParameterCloud run_sensitivity(const IdentificationProblem& problem,
                               const Eigen::VectorXd& p_star,
                               const LoadingProgram& metric_program,
                               const SensitivityOptions& opts);

}  // namespace ratchet

#endif
