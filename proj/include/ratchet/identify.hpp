// Copyright (c) the ratchet developers. See the top-level LICENSE file.
// SPDX-License-Identifier: Apache-2.0

#ifndef RATCHET_IDENTIFY_HPP
#define RATCHET_IDENTIFY_HPP

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "ratchet/simulate.hpp"

namespace ratchet {

struct ParameterSlot {
  std::string name;
  bool log_scale = false;     // optimized as ln(value) to stay positive
  bool conservative = false;  // member of p_c (hardening pair + branch c's)
};

// Binds the flat parameter vector to named MaterialParams fields. Only the
// free parameters appear; fixed constants (elastic/thermal block, the OW-I
// unbounded branch) live in the template and cannot be perturbed through
// this layout.
class ParameterLayout {
 public:
  ParameterLayout(ModelFamily family, int n_branches, bool voce);
  static ParameterLayout for_params(const MaterialParams& p);

  int size() const { return static_cast<int>(slots_.size()); }
  const std::vector<ParameterSlot>& slots() const { return slots_; }
  std::vector<std::string> names() const;

  Eigen::VectorXd from_params(const MaterialParams& p) const;
  MaterialParams to_params(const Eigen::VectorXd& physical,
                           const MaterialParams& tmpl) const;

  // Optimizer coordinates: ln() on log-scaled slots, identity otherwise.
  Eigen::VectorXd encode(const Eigen::VectorXd& physical) const;
  Eigen::VectorXd decode(const Eigen::VectorXd& internal) const;

  std::vector<int> conservative_indices() const;
  std::vector<int> dissipative_indices() const;

 private:
  ModelFamily family_;
  int n_branches_;
  bool voce_;
  std::vector<ParameterSlot> slots_;
};

struct IdentificationProblem {
  MaterialParams template_params;  // model kind + fixed constants
  std::vector<LoadingProgram> programs;
  std::vector<ExperimentRecord> records;
  Eigen::MatrixXd weight;  // SPD; empty means identity
  SimOptions sim_options;

  void add_test(LoadingProgram program, ExperimentRecord record);
  void validate() const;
  ParameterLayout layout() const { return ParameterLayout::for_params(template_params); }
  int n_data() const;
  // Concatenated per-test (max, min) pairs in cycle order.
  Eigen::VectorXd experimental_vector() const;
};

// Concatenated model extrema for physical parameter vector p, same layout as
// experimental_vector(). Simulation failures rethrow with p attached.
Eigen::VectorXd model_response(const Eigen::VectorXd& p,
                               const IdentificationProblem& problem);

double error_functional(const Eigen::VectorXd& p,
                        const IdentificationProblem& problem);

struct NelderMeadOptions {
  double initial_step_rel = 0.05;  // relative simplex perturbation
  double initial_step_abs = 1e-4;  // used for zero coordinates
  double diameter_tol = 1e-8;
  int max_evals = 4000;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int evals = 0;
  bool converged = false;
};

// Derivative-free simplex minimizer. Failed evaluations count as +inf and
// the returned point is never worse than x0. Ties keep the older vertex.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0,
                             const NelderMeadOptions& opts = {});

struct NestedOptions {
  NelderMeadOptions outer{.diameter_tol = 1e-7, .max_evals = 200};
  NelderMeadOptions inner{.diameter_tol = 1e-7, .max_evals = 400};
  int outer_rounds = 1;  // repeats of the outer loop, warm-started
};

struct NestedResult {
  Eigen::VectorXd x;
  double f = 0.0;
};

// Partial-minimization scheme: for every outer objective evaluation over the
// coordinates in outer_idx, the inner coordinates are re-optimized (warm
// started). Returns the best point seen anywhere.
NestedResult nested_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0,
                             const std::vector<int>& inner_idx,
                             const std::vector<int>& outer_idx,
                             const NestedOptions& opts = {});

// Nested identification: the inner loop minimizes over the conservative
// parameters at fixed dissipative ones, the outer loop over the dissipative
// set. Both loops run in encoded (log where positive) coordinates.
Eigen::VectorXd nested_identify(const IdentificationProblem& problem,
                                const Eigen::VectorXd& p0,
                                const NestedOptions& opts = {});

// Central differences of a generic vector map, one column per input slot.
Eigen::MatrixXd fd_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& p, double rel_step = 1e-5, int n_threads = 0);

// Central-difference Jacobian of the model response, physical coordinates.
Eigen::MatrixXd jacobian_fd(const Eigen::VectorXd& p,
                            const IdentificationProblem& problem,
                            double rel_step = 1e-5, int n_threads = 0);

struct RefineOptions {
  double grad_tol = 0.0;   // 0: auto, 1e-8 * max(1, Phi at entry)
  double rel_step = 1e-5;  // Jacobian step
  double lambda0 = 1e-3;   // initial LM damping
  double max_step = 0.0;   // cap on ||delta||_inf per iteration (0: none)
  int max_iters = 60;
  int max_rejects = 16;
  int n_threads = 0;
};

struct RefineResult {
  Eigen::VectorXd p;
  Eigen::MatrixXd jacobian;  // at the returned point
  double phi = 0.0;
  double grad_inf_norm = 0.0;  // parameter-scaled, see scaled_gradient_inf_norm
  int iters = 0;
  bool converged = false;
};

// Damped Gauss-Newton (Levenberg-Marquardt) on a generic residual map
// r(p); minimizes ||r(p)||^2 until the parameter-scaled gradient drops
// below grad_tol. Residual evaluations that throw reject the trial step.
RefineResult lm_minimize(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
    const Eigen::VectorXd& p0, const RefineOptions& opts = {});

// Levenberg-Marquardt refinement down to (approximately) zero gradient.
RefineResult gauss_newton_refine(const Eigen::VectorXd& p,
                                 const IdentificationProblem& problem,
                                 const RefineOptions& opts = {});

struct GaussNewtonStep {
  Eigen::VectorXd step;
  double phi_before = 0.0;
  double phi_after = 0.0;
};

// One undamped Gauss-Newton increment (least-squares solve via QR), used by
// the overparametrization diagnostics.
GaussNewtonStep gauss_newton_step(const Eigen::VectorXd& p,
                                  const IdentificationProblem& problem,
                                  double rel_step = 1e-5);

// max_i |dPhi/dp_i| * max(|p_i|, 1): gradient in parameter-scaled units.
double scaled_gradient_inf_norm(const Eigen::MatrixXd& J,
                                const Eigen::VectorXd& residual,
                                const Eigen::VectorXd& p);

nlohmann::json nested_options_to_json(const NestedOptions&);
NestedOptions nested_options_from_json(const nlohmann::json&);

}  // namespace ratchet

#endif
