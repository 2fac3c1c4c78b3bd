// Copyright (c) the ratchet developers. See the top-level LICENSE file.
// SPDX-License-Identifier: Apache-2.0

#include "ratchet/identify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ratchet/errors.hpp"
#include "ratchet/parallel.hpp"

namespace ratchet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_vector(const Eigen::VectorXd& p) {
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < p.size(); ++i) {
    if (i) os << ", ";
    os << p[i];
  }
  os << "]";
  return os.str();
}

}  // namespace

ParameterLayout::ParameterLayout(ModelFamily family, int n_branches, bool voce)
    : family_(family), n_branches_(n_branches), voce_(voce) {
  if (n_branches < 2 || n_branches > 4) {
    throw ConfigError("layout: n_branches must be 2..4");
  }
  if (voce) {
    slots_.push_back({"p1_MPa2", false, true});
    slots_.push_back({"p2_MPa", true, true});
  } else {
    slots_.push_back({"gamma_MPa", false, true});
    slots_.push_back({"beta_MPa", false, true});
  }
  for (int l = 0; l < n_branches; ++l) {
    slots_.push_back({"c" + std::to_string(l + 1) + "_MPa", true, true});
  }
  switch (family) {
    case ModelFamily::AF:
      for (int l = 0; l < n_branches; ++l) {
        slots_.push_back({"kappa" + std::to_string(l + 1) + "_perMPa", true, false});
      }
      break;
    case ModelFamily::OW1:
      // The unbounded branch (kept last) stays purely elastic and is
      // excluded from the identification.
      for (int l = 0; l < n_branches - 1; ++l) {
        slots_.push_back({"r" + std::to_string(l + 1) + "_MPa", true, false});
      }
      break;
    case ModelFamily::OW2:
      for (int l = 0; l < n_branches; ++l) {
        slots_.push_back({"r" + std::to_string(l + 1) + "_MPa", true, false});
      }
      break;
  }
  slots_.push_back({"K_MPa", true, false});
  if (family == ModelFamily::OW2) slots_.push_back({"m", true, false});
}

ParameterLayout ParameterLayout::for_params(const MaterialParams& p) {
  p.validate();
  if (p.family == ModelFamily::OW1 && !p.branches.back().unbounded) {
    throw ConfigError("layout: the OW-I unbounded branch must be the last branch");
  }
  return ParameterLayout(p.family, p.n_branches(), p.uses_voce());
}

std::vector<std::string> ParameterLayout::names() const {
  std::vector<std::string> out;
  out.reserve(slots_.size());
  for (const auto& s : slots_) out.push_back(s.name);
  return out;
}

Eigen::VectorXd ParameterLayout::from_params(const MaterialParams& p) const {
  Eigen::VectorXd x(size());
  int i = 0;
  if (voce_) {
    const auto& v = std::get<VoceHardening>(p.hardening);
    x[i++] = v.p1;
    x[i++] = v.p2;
  } else {
    const auto& nh = std::get<NewHardening>(p.hardening);
    x[i++] = nh.gamma;
    x[i++] = nh.beta;
  }
  for (int l = 0; l < n_branches_; ++l) x[i++] = p.branches[l].c;
  switch (family_) {
    case ModelFamily::AF:
      for (int l = 0; l < n_branches_; ++l) x[i++] = p.branches[l].kappa;
      break;
    case ModelFamily::OW1:
      for (int l = 0; l < n_branches_ - 1; ++l) x[i++] = p.branches[l].r;
      break;
    case ModelFamily::OW2:
      for (int l = 0; l < n_branches_; ++l) x[i++] = p.branches[l].r;
      break;
  }
  x[i++] = p.yield_stress;
  if (family_ == ModelFamily::OW2) x[i++] = p.ow2_m;
  return x;
}

MaterialParams ParameterLayout::to_params(const Eigen::VectorXd& physical,
                                          const MaterialParams& tmpl) const {
  if (physical.size() != size()) {
    throw ConfigError("layout: parameter vector has wrong length");
  }
  if (tmpl.family != family_ || tmpl.n_branches() != n_branches_ ||
      tmpl.uses_voce() != voce_) {
    throw ConfigError("layout: template does not match this layout");
  }
  MaterialParams p = tmpl;
  int i = 0;
  if (voce_) {
    p.hardening = VoceHardening{physical[i], physical[i + 1]};
  } else {
    p.hardening = NewHardening{physical[i], physical[i + 1]};
  }
  i += 2;
  for (int l = 0; l < n_branches_; ++l) p.branches[l].c = physical[i++];
  switch (family_) {
    case ModelFamily::AF:
      for (int l = 0; l < n_branches_; ++l) p.branches[l].kappa = physical[i++];
      break;
    case ModelFamily::OW1:
      for (int l = 0; l < n_branches_ - 1; ++l) p.branches[l].r = physical[i++];
      break;
    case ModelFamily::OW2:
      for (int l = 0; l < n_branches_; ++l) p.branches[l].r = physical[i++];
      break;
  }
  p.yield_stress = physical[i++];
  if (family_ == ModelFamily::OW2) p.ow2_m = physical[i++];
  return p;
}

Eigen::VectorXd ParameterLayout::encode(const Eigen::VectorXd& physical) const {
  Eigen::VectorXd z = physical;
  for (int i = 0; i < size(); ++i) {
    if (slots_[i].log_scale) {
      if (physical[i] <= 0.0) {
        throw ConfigError("layout: slot '" + slots_[i].name +
                          "' must be positive for log-space optimization");
      }
      z[i] = std::log(physical[i]);
    }
  }
  return z;
}

Eigen::VectorXd ParameterLayout::decode(const Eigen::VectorXd& internal) const {
  Eigen::VectorXd x = internal;
  for (int i = 0; i < size(); ++i) {
    if (slots_[i].log_scale) x[i] = std::exp(internal[i]);
  }
  return x;
}

std::vector<int> ParameterLayout::conservative_indices() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    if (slots_[i].conservative) out.push_back(i);
  }
  return out;
}

std::vector<int> ParameterLayout::dissipative_indices() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    if (!slots_[i].conservative) out.push_back(i);
  }
  return out;
}

void IdentificationProblem::add_test(LoadingProgram program, ExperimentRecord record) {
  record.validate();
  const auto cyc = program.cyclic_block();
  if (!cyc || cyc->second.n_cycles != record.n_cycles()) {
    throw ConfigError("problem: record does not match the program's cyclic stage");
  }
  programs.push_back(std::move(program));
  records.push_back(std::move(record));
}

void IdentificationProblem::validate() const {
  template_params.validate();
  layout();  // checks the OW-I branch convention
  if (programs.size() != records.size() || programs.empty()) {
    throw ConfigError("problem: needs at least one (program, record) pair");
  }
  const int n = n_data();
  if (n < layout().size()) {
    throw ConfigError("problem: fewer data points than free parameters");
  }
  if (weight.size() != 0 && (weight.rows() != n || weight.cols() != n)) {
    throw ConfigError("problem: weighting matrix has wrong shape");
  }
}

int IdentificationProblem::n_data() const {
  int n = 0;
  for (const auto& r : records) n += 2 * r.n_cycles();
  return n;
}

Eigen::VectorXd IdentificationProblem::experimental_vector() const {
  Eigen::VectorXd out(n_data());
  int i = 0;
  for (const auto& r : records) {
    for (int c = 0; c < r.n_cycles(); ++c) {
      out[i++] = r.max_strain[c];
      out[i++] = r.min_strain[c];
    }
  }
  return out;
}

Eigen::VectorXd model_response(const Eigen::VectorXd& p,
                               const IdentificationProblem& problem) {
  const ParameterLayout layout = problem.layout();
  Eigen::VectorXd out(problem.n_data());
  try {
    const MaterialParams mp = layout.to_params(p, problem.template_params);
    mp.validate();
    int i = 0;
    for (std::size_t t = 0; t < problem.programs.size(); ++t) {
      const SimulationTrace trace =
          integrate(mp, problem.programs[t], problem.sim_options);
      const ExperimentRecord rec = extract_extrema(trace, problem.programs[t]);
      for (int c = 0; c < rec.n_cycles(); ++c) {
        out[i++] = rec.max_strain[c];
        out[i++] = rec.min_strain[c];
      }
    }
  } catch (const std::exception& e) {
    throw NumericalError(std::string("model_response failed: ") + e.what() +
                         " at p = " + format_vector(p));
  }
  return out;
}

double error_functional(const Eigen::VectorXd& p,
                        const IdentificationProblem& problem) {
  const Eigen::VectorXd r = problem.experimental_vector() - model_response(p, problem);
  if (problem.weight.size() == 0) return r.squaredNorm();
  return r.dot(problem.weight * r);
}

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const NelderMeadOptions& opts) {
  const int n = static_cast<int>(x0.size());
  NelderMeadResult result;

  long age_counter = 0;
  struct Vertex {
    Eigen::VectorXd x;
    double f;
    long age;
  };
  std::vector<Vertex> simplex;

  auto safe_eval = [&](const Eigen::VectorXd& x) -> double {
    ++result.evals;
    try {
      const double v = f(x);
      return std::isfinite(v) ? v : kInf;
    } catch (const std::exception&) {
      return kInf;
    }
  };

  simplex.push_back({x0, safe_eval(x0), age_counter++});
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x = x0;
    const double step = x0[i] != 0.0 ? opts.initial_step_rel * std::abs(x0[i])
                                     : opts.initial_step_abs;
    x[i] += step;
    simplex.push_back({x, safe_eval(x), age_counter++});
  }

  // Ties keep the older vertex for determinism.
  auto order = [&]() {
    std::sort(simplex.begin(), simplex.end(), [](const Vertex& a, const Vertex& b) {
      if (a.f != b.f) return a.f < b.f;
      return a.age < b.age;
    });
  };

  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
  order();
  while (result.evals < opts.max_evals) {
    double diameter = 0.0;
    for (int v = 1; v <= n; ++v) {
      diameter = std::max(
          diameter, (simplex[v].x - simplex[0].x).lpNorm<Eigen::Infinity>());
    }
    if (diameter < opts.diameter_tol) {
      result.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int v = 0; v < n; ++v) centroid += simplex[v].x;
    centroid /= n;

    const Vertex& worst = simplex[n];
    const Eigen::VectorXd xr = centroid + alpha * (centroid - worst.x);
    const double fr = safe_eval(xr);

    if (fr < simplex[0].f) {
      const Eigen::VectorXd xe = centroid + gamma * (xr - centroid);
      const double fe = safe_eval(xe);
      if (fe < fr) {
        simplex[n] = {xe, fe, age_counter++};
      } else {
        simplex[n] = {xr, fr, age_counter++};
      }
    } else if (fr < simplex[n - 1].f) {
      simplex[n] = {xr, fr, age_counter++};
    } else {
      const bool outside = fr < worst.f;
      const Eigen::VectorXd xc =
          outside ? (centroid + rho * (xr - centroid)).eval()
                  : (centroid + rho * (worst.x - centroid)).eval();
      const double fc = safe_eval(xc);
      if (fc < (outside ? fr : worst.f)) {
        simplex[n] = {xc, fc, age_counter++};
      } else {
        for (int v = 1; v <= n; ++v) {
          simplex[v].x = simplex[0].x + sigma * (simplex[v].x - simplex[0].x);
          simplex[v].f = safe_eval(simplex[v].x);
          simplex[v].age = age_counter++;
        }
      }
    }
    order();
  }

  order();
  result.x = simplex[0].x;
  result.f = simplex[0].f;
  return result;
}

NestedResult nested_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0,
                             const std::vector<int>& inner_idx,
                             const std::vector<int>& outer_idx,
                             const NestedOptions& opts) {
  auto safe = [&](const Eigen::VectorXd& x) -> double {
    try {
      const double v = f(x);
      return std::isfinite(v) ? v : kInf;
    } catch (const std::exception&) {
      return kInf;
    }
  };

  NestedResult best{x0, safe(x0)};

  Eigen::VectorXd warm_inner(inner_idx.size());
  for (std::size_t i = 0; i < inner_idx.size(); ++i) warm_inner[i] = x0[inner_idx[i]];
  Eigen::VectorXd outer_x(outer_idx.size());
  for (std::size_t i = 0; i < outer_idx.size(); ++i) outer_x[i] = x0[outer_idx[i]];

  auto assemble = [&](const Eigen::VectorXd& xi, const Eigen::VectorXd& xo) {
    Eigen::VectorXd x = x0;
    for (std::size_t i = 0; i < inner_idx.size(); ++i) x[inner_idx[i]] = xi[i];
    for (std::size_t i = 0; i < outer_idx.size(); ++i) x[outer_idx[i]] = xo[i];
    return x;
  };

  auto outer_objective = [&](const Eigen::VectorXd& xo) -> double {
    auto inner_objective = [&](const Eigen::VectorXd& xi) -> double {
      return safe(assemble(xi, xo));
    };
    const NelderMeadResult inner = nelder_mead(inner_objective, warm_inner, opts.inner);
    if (inner.f < best.f) {
      best.f = inner.f;
      best.x = assemble(inner.x, xo);
    }
    warm_inner = inner.x;
    return inner.f;
  };

  for (int round = 0; round < std::max(1, opts.outer_rounds); ++round) {
    const NelderMeadResult outer = nelder_mead(outer_objective, outer_x, opts.outer);
    outer_x = outer.x;
  }
  return best;
}

Eigen::VectorXd nested_identify(const IdentificationProblem& problem,
                                const Eigen::VectorXd& p0, const NestedOptions& opts) {
  problem.validate();
  const ParameterLayout layout = problem.layout();
  auto objective = [&](const Eigen::VectorXd& z) {
    return error_functional(layout.decode(z), problem);
  };
  const NestedResult best =
      nested_minimize(objective, layout.encode(p0), layout.conservative_indices(),
                      layout.dissipative_indices(), opts);
  return layout.decode(best.x);
}

Eigen::MatrixXd fd_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& p, double rel_step, int n_threads) {
  const int n = static_cast<int>(p.size());
  std::vector<Eigen::VectorXd> plus(n), minus(n);
  parallel_for(static_cast<std::size_t>(n), n_threads, [&](std::size_t i) {
    const double h = rel_step * std::max(std::abs(p[i]), 1e-6);
    Eigen::VectorXd pp = p, pm = p;
    pp[i] += h;
    pm[i] -= h;
    plus[i] = fn(pp);
    minus[i] = fn(pm);
  });
  if (n == 0) return Eigen::MatrixXd();
  Eigen::MatrixXd J(plus[0].size(), n);
  for (int i = 0; i < n; ++i) {
    const double h = rel_step * std::max(std::abs(p[i]), 1e-6);
    J.col(i) = (plus[i] - minus[i]) / (2.0 * h);
  }
  return J;
}

Eigen::MatrixXd jacobian_fd(const Eigen::VectorXd& p,
                            const IdentificationProblem& problem, double rel_step,
                            int n_threads) {
  problem.validate();
  Eigen::MatrixXd J(problem.n_data(), p.size());
  parallel_for(static_cast<std::size_t>(p.size()), n_threads, [&](std::size_t i) {
    const double h = rel_step * std::max(std::abs(p[i]), 1e-6);
    Eigen::VectorXd pp = p, pm = p;
    pp[i] += h;
    pm[i] -= h;
    const Eigen::VectorXd mp = model_response(pp, problem);
    const Eigen::VectorXd mm = model_response(pm, problem);
    J.col(i) = (mp - mm) / (2.0 * h);
  });
  return J;
}

double scaled_gradient_inf_norm(const Eigen::MatrixXd& J,
                                const Eigen::VectorXd& residual,
                                const Eigen::VectorXd& p) {
  const Eigen::VectorXd grad = -2.0 * (J.transpose() * residual);
  double out = 0.0;
  for (int i = 0; i < grad.size(); ++i) {
    out = std::max(out, std::abs(grad[i]) * std::max(std::abs(p[i]), 1.0));
  }
  return out;
}

namespace {

// Scales residual and Jacobian by L^T where W = L L^T, so the weighted
// problem reduces to the identity-weighted one.
void apply_weight(const IdentificationProblem& problem, Eigen::VectorXd& r,
                  Eigen::MatrixXd* J) {
  if (problem.weight.size() == 0) return;
  Eigen::LLT<Eigen::MatrixXd> llt(problem.weight);
  if (llt.info() != Eigen::Success) {
    throw ConfigError("weighting matrix is not positive-definite");
  }
  const Eigen::MatrixXd Lt = llt.matrixL().transpose();
  r = Lt * r;
  if (J) *J = Lt * (*J);
}

}  // namespace

RefineResult lm_minimize(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
    const Eigen::VectorXd& p0, const RefineOptions& opts) {
  RefineResult res;
  res.p = p0;
  res.phi = residual(p0).squaredNorm();
  const double grad_tol =
      opts.grad_tol > 0.0 ? opts.grad_tol : 1e-8 * std::max(1.0, res.phi);

  // Gain-ratio controlled damping (Nielsen's update) on the diag-scaled
  // normal equations. The plain multiply-by-ten schedule zigzags in curved
  // ravines and stalls well above the gradient tolerance.
  double lambda = opts.lambda0;
  double nu = 2.0;
  for (res.iters = 0; res.iters < opts.max_iters; ++res.iters) {
    const Eigen::MatrixXd J =
        fd_jacobian(residual, res.p, opts.rel_step, opts.n_threads);
    const Eigen::VectorXd r = residual(res.p);
    res.jacobian = J;
    res.grad_inf_norm = scaled_gradient_inf_norm(J, r, res.p);
    if (res.grad_inf_norm <= grad_tol) {
      res.converged = true;
      return res;
    }

    const Eigen::MatrixXd A = J.transpose() * J;
    const Eigen::VectorXd g = -(J.transpose() * r);
    const double diag_floor = 1e-12 * std::max(A.diagonal().maxCoeff(), 1e-300);
    Eigen::VectorXd scale(A.rows());
    for (int i = 0; i < A.rows(); ++i) scale[i] = std::max(A(i, i), diag_floor);

    bool accepted = false;
    for (int rej = 0; rej < opts.max_rejects; ++rej) {
      Eigen::MatrixXd Alm = A;
      for (int i = 0; i < Alm.rows(); ++i) Alm(i, i) += lambda * scale[i];
      Eigen::LLT<Eigen::MatrixXd> llt(Alm);
      if (llt.info() != Eigen::Success) {
        lambda *= nu;  // singular at this damping: retry stiffer
        nu *= 2.0;
        continue;
      }
      Eigen::VectorXd delta = llt.solve(g);
      if (opts.max_step > 0.0) {
        const double norm = delta.lpNorm<Eigen::Infinity>();
        if (norm > opts.max_step) delta *= opts.max_step / norm;
      }
      const Eigen::VectorXd p_trial = res.p + delta;
      double phi_trial = kInf;
      try {
        phi_trial = residual(p_trial).squaredNorm();
        if (!std::isfinite(phi_trial)) phi_trial = kInf;
      } catch (const std::exception&) {
        phi_trial = kInf;
      }
      const double predicted =
          delta.dot((lambda * scale.asDiagonal() * delta) + g);
      if (phi_trial < res.phi && predicted > 0.0) {
        const double rho = (res.phi - phi_trial) / predicted;
        res.p = p_trial;
        res.phi = phi_trial;
        lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
        lambda = std::max(lambda, 1e-14);
        nu = 2.0;
        accepted = true;
        break;
      }
      lambda *= nu;
      nu *= 2.0;
    }
    if (!accepted) {
      // Stationary within the damping budget; report the last gradient.
      std::ostringstream os;
      os << "LM made no progress (lambda = " << lambda
         << ", J^T J diag range = " << A.diagonal().minCoeff() << " .. "
         << A.diagonal().maxCoeff() << ")";
      if (res.grad_inf_norm > grad_tol * 1e3) {
        throw NumericalError(os.str());
      }
      return res;
    }
  }

  // Final gradient check after the iteration budget.
  const Eigen::MatrixXd J = fd_jacobian(residual, res.p, opts.rel_step, opts.n_threads);
  res.jacobian = J;
  res.grad_inf_norm = scaled_gradient_inf_norm(J, residual(res.p), res.p);
  res.converged = res.grad_inf_norm <= grad_tol;
  return res;
}

RefineResult gauss_newton_refine(const Eigen::VectorXd& p0,
                                 const IdentificationProblem& problem,
                                 const RefineOptions& opts) {
  problem.validate();
  const ParameterLayout layout = problem.layout();
  const Eigen::VectorXd exp_vec = problem.experimental_vector();

  auto residual_p = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r = exp_vec - model_response(p, problem);
    apply_weight(problem, r, nullptr);
    return r;
  };
  auto residual_z = [&](const Eigen::VectorXd& z) {
    return residual_p(layout.decode(z));
  };

  const double grad_tol =
      opts.grad_tol > 0.0 ? opts.grad_tol
                          : 1e-8 * std::max(1.0, residual_p(p0).squaredNorm());

  // Stage 1 in physical coordinates: robust against the collapsed-branch
  // valleys that the log parametrization makes reachable in one step.
  RefineOptions o1 = opts;
  o1.grad_tol = grad_tol;
  RefineResult stage1;
  try {
    stage1 = lm_minimize(residual_p, p0, o1);
  } catch (const NumericalError&) {
    stage1.p = p0;
    stage1.phi = residual_p(p0).squaredNorm();
  }

  // Stage 2 polishes in the encoded coordinates, where the terminal
  // convergence of the badly scaled slots is fast. Starting near the
  // optimum keeps the step local.
  Eigen::VectorXd p_best = stage1.p;
  double phi_best = stage1.phi;
  int iters = stage1.iters;
  try {
    RefineOptions o2 = opts;
    o2.grad_tol = 0.1 * grad_tol;
    const RefineResult polish = lm_minimize(residual_z, layout.encode(stage1.p), o2);
    iters += polish.iters;
    if (polish.phi <= phi_best) {
      p_best = layout.decode(polish.p);
      phi_best = polish.phi;
    }
  } catch (const NumericalError&) {
    // keep the stage-1 point
  }

  RefineResult res;
  res.p = p_best;
  res.phi = phi_best;
  res.iters = iters;
  // Report in physical coordinates: the response Jacobian d Mod / d p and
  // the parameter-scaled gradient the stopping rule is defined on.
  res.jacobian = jacobian_fd(res.p, problem, opts.rel_step, opts.n_threads);
  Eigen::VectorXd r = exp_vec - model_response(res.p, problem);
  Eigen::MatrixXd Jw = res.jacobian;
  apply_weight(problem, r, &Jw);
  res.grad_inf_norm = scaled_gradient_inf_norm(Jw, r, res.p);
  res.converged = res.grad_inf_norm <= grad_tol;
  return res;
}

GaussNewtonStep gauss_newton_step(const Eigen::VectorXd& p,
                                  const IdentificationProblem& problem,
                                  double rel_step) {
  problem.validate();
  GaussNewtonStep out;
  Eigen::MatrixXd J = jacobian_fd(p, problem, rel_step);
  Eigen::VectorXd r = problem.experimental_vector() - model_response(p, problem);
  apply_weight(problem, r, &J);
  out.phi_before = r.squaredNorm();
  // Plain normal equations on purpose: near-singular J^T J is exactly the
  // pathology this step is used to expose.
  const Eigen::MatrixXd A = J.transpose() * J;
  out.step = A.ldlt().solve(J.transpose() * r);
  // The post-step misfit is evaluated on the linearized response.
  out.phi_after = (r - J * out.step).squaredNorm();
  return out;
}

nlohmann::json nested_options_to_json(const NestedOptions& o) {
  auto nm = [](const NelderMeadOptions& n) {
    return nlohmann::json{{"initial_step_rel", n.initial_step_rel},
                          {"initial_step_abs", n.initial_step_abs},
                          {"diameter_tol", n.diameter_tol},
                          {"max_evals", n.max_evals}};
  };
  return {{"outer", nm(o.outer)}, {"inner", nm(o.inner)}, {"outer_rounds", o.outer_rounds}};
}

NestedOptions nested_options_from_json(const nlohmann::json& j) {
  NestedOptions o;
  auto nm = [](const nlohmann::json& jj, NelderMeadOptions& n) {
    n.initial_step_rel = jj.value("initial_step_rel", n.initial_step_rel);
    n.initial_step_abs = jj.value("initial_step_abs", n.initial_step_abs);
    n.diameter_tol = jj.value("diameter_tol", n.diameter_tol);
    n.max_evals = jj.value("max_evals", n.max_evals);
  };
  if (j.contains("outer")) nm(j["outer"], o.outer);
  if (j.contains("inner")) nm(j["inner"], o.inner);
  o.outer_rounds = j.value("outer_rounds", o.outer_rounds);
  return o;
}

}  // namespace ratchet
