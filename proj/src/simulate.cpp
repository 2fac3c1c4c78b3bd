// Copyright (c) the ratchet developers. See the top-level LICENSE file.
// SPDX-License-Identifier: Apache-2.0

#include "ratchet/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ratchet/csv.hpp"
#include "ratchet/errors.hpp"

namespace ratchet {

namespace {

constexpr double kSqrt23 = 0.81649658092772603273;  // sqrt(2/3)

// Bracketed root solve (Illinois-damped regula falsi). Requires
// h(lo) >= 0 >= h(hi); returns x with |h(x)| <= htol.
template <typename F>
double solve_bracketed(F&& h, double lo, double hi, double hlo, double hhi,
                       double htol, int max_iters = 200) {
  if (hlo <= htol) return lo;
  if (hhi >= -htol) return hi;
  double flo = hlo, fhi = hhi;
  double x = lo, fx = flo;
  for (int it = 0; it < max_iters; ++it) {
    x = (lo * fhi - hi * flo) / (fhi - flo);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    fx = h(x);
    if (std::abs(fx) <= htol || hi - lo <= 1.0e-15 * (1.0 + hi)) return x;
    if (fx > 0.0) {
      lo = x;
      flo = fx;
      fhi *= 0.5;  // Illinois damping against endpoint stagnation
    } else {
      hi = x;
      fhi = fx;
      flo *= 0.5;
    }
    if (flo > hlo) flo = hlo;
    if (fhi < hhi) fhi = hhi;
  }
  throw NumericalError("scalar corrector did not converge");
}

struct ScratchState {
  SymTensor eps_i;
  std::array<SymTensor, 4> eps_li{};
  double s = 0.0;
  double s_eps = 0.0;
  double theta = 0.0;
  double theta_rate = 0.0;  // lagged, feeds the thermal strain trace rate
};

struct BranchEval {
  SymTensor X;
  SymTensor deps_li;
};

struct TrialEval {
  double f = 0.0;
  SymTensor sigma_eff;
  double sigma_eff_dev_norm = 0.0;
  double deps_dev_norm = 0.0;  // || elastic dev increment + dlam*nhat ||
  std::array<BranchEval, 4> branches{};
};

class Stepper {
 public:
  Stepper(const MaterialParams& p, const SimOptions& opts, TraceDiagnostics& diag)
      : p_(p), opts_(opts), diag_(diag), n_br_(p.n_branches()) {}

  double cumulative_dissipation() const { return cum_diss_; }

  // Advances over [t0, t1] with adaptive halving on corrector failure.
  void advance(ScratchState& st, const LoadingProgram& program, double t0,
               double t1, int depth = 0) {
    ScratchState trial = st;
    const double diss0 = cum_diss_;
    try {
      step(trial, program.stress_at(t0), program.stress_at(t1), t1 - t0);
    } catch (const NumericalError&) {
      cum_diss_ = diss0;
      if (depth >= opts_.max_substep_depth) {
        throw NumericalError("stress corrector did not converge at t = " +
                             std::to_string(t1));
      }
      const double tm = 0.5 * (t0 + t1);
      advance(st, program, t0, tm, depth + 1);
      advance(st, program, tm, t1, depth + 1);
      return;
    }
    st = trial;
    ++diag_.total_substeps;
  }

 private:
  // One implicit step from sigma0 to sigma1 (axial values, MPa).
  void step(ScratchState& st, double sig0, double sig1, double dt) {
    const auto& et = p_.elastic_thermal;
    const SymTensor sigma1 = SymTensor::diag(sig1, 0.0, 0.0);

    // Deviatoric elastic strain increment is known once the stress is;
    // the axial stress prescribes the full tensor (lateral components zero).
    const double dsig = sig1 - sig0;
    const SymTensor d_el = (dsig / (2.0 * et.mu)) *
                           SymTensor::diag(2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0);
    const double d_el_norm = frobenius_norm(d_el);

    std::array<SymTensor, 4> X_n;
    SymTensor sigma_eff_tr = sigma1;
    for (int l = 0; l < n_br_; ++l) {
      X_n[l] = backstress(st.eps_i, st.eps_li[l], p_.branches[l].c);
      sigma_eff_tr -= X_n[l];
    }
    const double R_tr =
        isotropic_hardening(st.s, st.s_eps + kSqrt23 * d_el_norm, p_.hardening);
    const double f_tr = frobenius_norm(deviator(sigma_eff_tr)) -
                        kSqrt23 * (p_.yield_stress + R_tr);

    double step_diss = 0.0;
    if (f_tr <= 0.0) {
      st.s_eps += kSqrt23 * d_el_norm;
    } else {
      step_diss = plastic_step(st, sigma1, d_el, d_el_norm, sigma_eff_tr, dt);
    }

    if (opts_.thermal) {
      const double tr_rate_e = dsig / (3.0 * et.k) / dt;
      const double tr_rate = tr_rate_e + et.alpha * st.theta_rate;
      const double theta_new =
          temperature_step(st.theta, tr_rate, step_diss / dt, et, dt);
      st.theta_rate = (theta_new - st.theta) / dt;
      st.theta = theta_new;
    }
  }

  TrialEval evaluate(const ScratchState& st, const SymTensor& sigma1,
                     double d_el_norm2, double d_el_dot_n, double dlam,
                     const SymTensor& nhat) const {
    TrialEval ev;
    const SymTensor eps_i_new = st.eps_i + dlam * nhat;
    ev.sigma_eff = sigma1;
    for (int l = 0; l < n_br_; ++l) {
      const Branch& br = p_.branches[l];
      const SymTensor X_tr = backstress(eps_i_new, st.eps_li[l], br.c);
      BranchEval& be = ev.branches[l];
      switch (p_.family) {
        case ModelFamily::AF: {
          be.X = (1.0 / (1.0 + br.c * br.kappa * dlam)) * X_tr;
          be.deps_li = (dlam * br.kappa) * be.X;
          break;
        }
        case ModelFamily::OW1: {
          if (br.unbounded) {
            be.X = X_tr;
            be.deps_li = SymTensor{};
            break;
          }
          const double radius = kSqrt23 * br.r;
          const double xt = frobenius_norm(X_tr);
          if (xt <= radius) {
            be.X = X_tr;
            be.deps_li = SymTensor{};
          } else {
            // Exact radial return onto the spherical micro-surface.
            be.X = (radius / xt) * X_tr;
            be.deps_li = ((xt - radius) / (br.c * xt)) * X_tr;
          }
          break;
        }
        case ModelFamily::OW2: {
          const double xt = frobenius_norm(X_tr);
          const double q = xt > 0.0
                               ? dlam * double_contract(nhat, (1.0 / xt) * X_tr)
                               : 0.0;
          if (xt <= 0.0 || q <= 0.0) {
            be.X = X_tr;
            be.deps_li = SymTensor{};
            break;
          }
          const double k0 = kSqrt23 / br.r;
          const double cq = br.c * q;
          const double m = p_.ow2_m;
          // xi + c q (k0 xi)^m = xt, monotone on [0, xt].
          double xi = xt;
          for (int it = 0; it < 80; ++it) {
            const double pw = std::pow(k0 * xi, m);
            if (!std::isfinite(pw)) {
              xi *= 0.5;
              continue;
            }
            const double g = xi + cq * pw - xt;
            if (std::abs(g) <= 1.0e-13 * (1.0 + xt)) break;
            const double dg = 1.0 + cq * m * pw / xi;
            double xi_new = xi - g / dg;
            if (!(xi_new > 0.0 && xi_new < xt)) xi_new = 0.5 * xi;
            xi = xi_new;
          }
          const SymTensor xhat = (1.0 / xt) * X_tr;
          be.X = xi * xhat;
          be.deps_li = (q * std::pow(k0 * xi, m)) * xhat;
          break;
        }
      }
      ev.sigma_eff -= be.X;
    }
    ev.sigma_eff_dev_norm = frobenius_norm(deviator(ev.sigma_eff));
    ev.deps_dev_norm =
        std::sqrt(std::max(0.0, d_el_norm2 + 2.0 * dlam * d_el_dot_n + dlam * dlam));
    const double R =
        isotropic_hardening(st.s + kSqrt23 * dlam, st.s_eps + kSqrt23 * ev.deps_dev_norm,
                            p_.hardening);
    ev.f = ev.sigma_eff_dev_norm - kSqrt23 * (p_.yield_stress + R);
    return ev;
  }

  double plastic_step(ScratchState& st, const SymTensor& sigma1,
                      const SymTensor& d_el, double d_el_norm,
                      const SymTensor& sigma_eff_tr, double dt) {
    const double f_tol = 1.0e-10 * std::max(1.0, p_.yield_stress);
    const double dev_tr = frobenius_norm(deviator(sigma_eff_tr));
    if (dev_tr <= 0.0) throw NumericalError("degenerate flow direction");
    SymTensor nhat = (1.0 / dev_tr) * deviator(sigma_eff_tr);

    const double d_el_norm2 = d_el_norm * d_el_norm;
    const bool viscous = !p_.viscosity.rate_independent;

    TrialEval ev;
    double dlam = 0.0;
    bool converged = false;
    for (int dir_it = 0; dir_it < opts_.max_direction_iters; ++dir_it) {
      const double d_el_dot_n = double_contract(d_el, nhat);
      auto f_of = [&](double x) {
        ev = evaluate(st, sigma1, d_el_norm2, d_el_dot_n, x, nhat);
        return ev.f;
      };
      if (!viscous) {
        // Consistency: drive f to zero.
        const double f0 = f_of(0.0);
        double hi = std::max(f0 / std::max(1.0, p_.branches[0].c + p_.yield_stress),
                             1.0e-16);
        double fhi = f_of(hi);
        int expand = 0;
        while (fhi > 0.0) {
          if (++expand > 120) throw NumericalError("no plastic bracket");
          hi *= 2.0;
          fhi = f_of(hi);
        }
        dlam = solve_bracketed(f_of, 0.0, hi, f0, fhi, f_tol);
      } else {
        // Perzyna: dlam = dt/eta <f/f0>^m, implicit in dlam.
        const auto g_of = [&](double x) {
          const double f = f_of(x);
          const double rate =
              f > 0.0 ? std::pow(f / kPerzynaF0, p_.viscosity.m_perzyna) /
                            p_.viscosity.eta
                      : 0.0;
          return dt * rate - x;  // decreasing in x for stable configurations
        };
        const double g0 = g_of(0.0);
        if (g0 <= 0.0) {
          dlam = 0.0;
        } else {
          double hi = g0;  // dt/eta <f_tr>^m bounds the implicit solution
          double ghi = g_of(hi);
          int expand = 0;
          while (ghi > 0.0) {
            if (++expand > 120) throw NumericalError("no viscous bracket");
            hi *= 2.0;
            ghi = g_of(hi);
          }
          const double g_tol = 1.0e-14 * std::max(1.0, hi);
          dlam = solve_bracketed(g_of, 0.0, hi, g0, ghi, g_tol);
        }
      }
      ev = evaluate(st, sigma1, d_el_norm2, double_contract(d_el, nhat), dlam, nhat);
      if (ev.sigma_eff_dev_norm <= 0.0) {
        throw NumericalError("effective stress deviator vanished");
      }
      const SymTensor nhat_new = (1.0 / ev.sigma_eff_dev_norm) * deviator(ev.sigma_eff);
      const double change = frobenius_norm(nhat_new - nhat);
      if (change <= 1.0e-12) {
        converged = true;  // commit with the direction ev was evaluated at
        break;
      }
      nhat = nhat_new;
    }
    if (!converged) throw NumericalError("flow direction iteration stalled");

    // Commit.
    const SymTensor deps_i = dlam * nhat;
    st.eps_i += deps_i;
    st.s += kSqrt23 * dlam;
    st.s_eps += kSqrt23 * ev.deps_dev_norm;

    const double w_p = double_contract(ev.sigma_eff, deps_i);
    diag_.min_plastic_work = std::min(diag_.min_plastic_work, w_p);
    diag_.work_scale = std::max(diag_.work_scale, std::abs(w_p));
    double work_sum = w_p;
    for (int l = 0; l < n_br_; ++l) {
      const BranchEval& be = ev.branches[l];
      st.eps_li[l] += be.deps_li;
      const double w_l = double_contract(be.X, be.deps_li);
      diag_.min_branch_work = std::min(diag_.min_branch_work, w_l);
      diag_.work_scale = std::max(diag_.work_scale, std::abs(w_l));
      work_sum += w_l;
      if (p_.family == ModelFamily::OW1 && !p_.branches[l].unbounded) {
        const double over =
            frobenius_norm(be.X) / (kSqrt23 * p_.branches[l].r) - 1.0;
        diag_.max_ow1_overshoot = std::max(diag_.max_ow1_overshoot, over);
      }
    }
    const double step_diss = work_sum * kMPaToPa / p_.elastic_thermal.rho;
    cum_diss_ += step_diss;
    return step_diss;
  }

  const MaterialParams& p_;
  const SimOptions& opts_;
  TraceDiagnostics& diag_;
  int n_br_;
  double cum_diss_ = 0.0;
};

void build_grid(const LoadingProgram& program, const SimOptions& opts,
                std::vector<double>& times, std::vector<std::size_t>& seg_first) {
  times.clear();
  times.push_back(0.0);
  seg_first.clear();
  double t0 = 0.0;
  for (const auto& seg : program.segments()) {
    seg_first.push_back(times.size() - 1);
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, HarmonicCycles>) {
            for (int c = 0; c < s.n_cycles; ++c) {
              for (int i = 1; i <= opts.steps_per_cycle; ++i) {
                times.push_back(t0 + c * s.period +
                                i * s.period / opts.steps_per_cycle);
              }
            }
            t0 += s.n_cycles * s.period;
          } else {
            const double dur = [&] {
              if constexpr (std::is_same_v<T, Hold>) return s.duration;
              else if constexpr (std::is_same_v<T, MonotonicRamp>) return s.duration;
              else return s.duration;
            }();
            if (dur > 0.0) {
              const int n = std::is_same_v<T, Hold> ? opts.hold_steps : opts.ramp_steps;
              for (int i = 1; i <= n; ++i) times.push_back(t0 + i * dur / n);
            }
            t0 += dur;
          }
        },
        seg);
  }
}

}  // namespace

void SimOptions::validate() const {
  if (stress_tol <= 0.0) throw ConfigError("stress_tol must be positive");
  if (steps_per_cycle < 40 || steps_per_cycle % 4 != 0) {
    throw ConfigError("steps_per_cycle must be >= 40 and divisible by 4");
  }
  if (ramp_steps < 1 || hold_steps < 1) {
    throw ConfigError("segment step counts must be >= 1");
  }
  if (state_stride < 0) throw ConfigError("state_stride must be >= 0");
  if (max_substep_depth < 1 || max_direction_iters < 2) {
    throw ConfigError("solver iteration limits out of range");
  }
}

SimOptions sim_options_from_json(const nlohmann::json& j) {
  SimOptions o;
  o.stress_tol = j.value("stress_tol_MPa", o.stress_tol);
  o.steps_per_cycle = j.value("steps_per_cycle", o.steps_per_cycle);
  o.ramp_steps = j.value("ramp_steps", o.ramp_steps);
  o.hold_steps = j.value("hold_steps", o.hold_steps);
  o.thermal = j.value("thermal", o.thermal);
  o.state_stride = j.value("state_stride", o.state_stride);
  o.max_substep_depth = j.value("max_substep_depth", o.max_substep_depth);
  o.max_direction_iters = j.value("max_direction_iters", o.max_direction_iters);
  o.validate();
  return o;
}

nlohmann::json sim_options_to_json(const SimOptions& o) {
  return {{"stress_tol_MPa", o.stress_tol},
          {"steps_per_cycle", o.steps_per_cycle},
          {"ramp_steps", o.ramp_steps},
          {"hold_steps", o.hold_steps},
          {"thermal", o.thermal},
          {"state_stride", o.state_stride},
          {"max_substep_depth", o.max_substep_depth},
          {"max_direction_iters", o.max_direction_iters}};
}

void ExperimentRecord::validate() const {
  if (max_strain.size() != min_strain.size()) {
    throw ConfigError("record: max/min arrays differ in length");
  }
  for (std::size_t i = 0; i < max_strain.size(); ++i) {
    if (max_strain[i] < min_strain[i]) {
      throw ConfigError("record: max_strain < min_strain at cycle " +
                        std::to_string(i + 1));
    }
  }
  if (meta.n_cycles != n_cycles()) {
    throw ConfigError("record: metadata cycle count mismatch");
  }
  if (meta.period <= 0.0) throw ConfigError("record: period must be positive");
}

double temperature_step(double theta, double tr_eps_rate, double delta_i,
                        const ElasticThermalParams& p, double dt) {
  if (theta <= 0.0) throw ConfigError("temperature_step: theta must be positive");
  const double c_theta =
      p.c_theta0_over_rho - p.alpha * p.alpha / p.rho * p.k * kMPaToPa * theta;
  if (c_theta <= 0.0) {
    throw ConfigError("temperature_step: c_theta <= 0 (unphysical configuration)");
  }
  const double source =
      -(p.alpha * p.k * kMPaToPa * theta / p.rho) * tr_eps_rate + delta_i;
  if (p.omega > 0.0) {
    const double equil = p.theta0 + source / p.omega;
    return equil + (theta - equil) * std::exp(-p.omega * dt / c_theta);
  }
  return theta + source / c_theta * dt;
}

SimulationTrace integrate(const MaterialParams& params,
                          const LoadingProgram& program, const SimOptions& opts) {
  params.validate();
  opts.validate();
  if (program.empty()) throw ConfigError("integrate: empty loading program");

  SimulationTrace trace;
  build_grid(program, opts, trace.time, trace.segment_first_node);
  trace.steps_per_cycle = opts.steps_per_cycle;
  const std::size_t n = trace.time.size();
  trace.sigma11.reserve(n);
  trace.eps11.reserve(n);
  trace.eps11_i.reserve(n);
  trace.theta.reserve(n);
  trace.s.reserve(n);
  trace.s_eps.reserve(n);
  trace.dissipation.reserve(n);

  const auto& et = params.elastic_thermal;
  ScratchState st;
  st.theta = et.theta0;
  Stepper stepper(params, opts, trace.diagnostics);

  const int n_br = params.n_branches();
  auto record_node = [&](std::size_t node) {
    const double sig = program.stress_at(trace.time[node]);
    const SymTensor sigma = SymTensor::diag(sig, 0.0, 0.0);
    const SymTensor eps_e = elastic_strain(sigma, et);
    const double eps_th = et.alpha / 3.0 * (st.theta - et.theta0);
    trace.sigma11.push_back(sig);
    trace.eps11.push_back(eps_e.xx + st.eps_i.xx + eps_th);
    trace.eps11_i.push_back(st.eps_i.xx);
    trace.theta.push_back(st.theta);
    trace.s.push_back(st.s);
    trace.s_eps.push_back(st.s_eps);
    trace.dissipation.push_back(stepper.cumulative_dissipation());

    // Stress-control verification: Hooke round-trip against the program.
    const SymTensor sigma_chk = hooke_stress(eps_e + st.eps_i, st.eps_i, et);
    const SymTensor resid = sigma_chk - sigma;
    double r = 0.0;
    for (double c : {resid.xx, resid.yy, resid.zz, resid.xy, resid.xz, resid.yz}) {
      r = std::max(r, std::abs(c));
    }
    trace.diagnostics.max_stress_residual =
        std::max(trace.diagnostics.max_stress_residual, r);

    if (opts.state_stride > 0 && node % opts.state_stride == 0) {
      MaterialState ms;
      ms.eps_i = st.eps_i;
      ms.eps_li.assign(st.eps_li.begin(), st.eps_li.begin() + n_br);
      ms.s = st.s;
      ms.s_eps = st.s_eps;
      ms.theta = st.theta;
      trace.state_node.push_back(node);
      trace.states.push_back(std::move(ms));
    }
  };

  record_node(0);
  for (std::size_t i = 1; i < n; ++i) {
    stepper.advance(st, program, trace.time[i - 1], trace.time[i]);
    record_node(i);
  }
  return trace;
}

ExperimentRecord extract_extrema(const SimulationTrace& trace,
                                 const LoadingProgram& program) {
  const auto cyc = program.cyclic_block();
  if (!cyc) throw ConfigError("extract_extrema: program has no cyclic stage");
  if (trace.segment_first_node.size() != program.segments().size() ||
      trace.steps_per_cycle <= 0) {
    throw ConfigError("extract_extrema: trace/program mismatch");
  }
  std::size_t seg_index = 0;
  for (std::size_t i = 0; i < program.segments().size(); ++i) {
    if (std::holds_alternative<HarmonicCycles>(program.segments()[i])) {
      seg_index = i;
      break;
    }
  }
  const HarmonicCycles& h = cyc->second;
  const std::size_t base = trace.segment_first_node[seg_index];
  const int spc = trace.steps_per_cycle;

  ExperimentRecord rec;
  rec.meta.sigma_m = h.mean;
  rec.meta.sigma_a_max = h.amplitude_to;
  rec.meta.amplitude_start = h.amplitude_from;
  rec.meta.n_cycles = h.n_cycles;
  rec.meta.period = h.period;
  for (const auto& seg : program.segments()) {
    if (const auto* r = std::get_if<MonotonicRamp>(&seg)) rec.meta.ramp_s = r->duration;
    if (const auto* hh = std::get_if<Hold>(&seg)) rec.meta.hold_s = hh->duration;
    if (const auto* u = std::get_if<Unload>(&seg)) rec.meta.unload_s = u->duration;
  }

  for (int c = 0; c < h.n_cycles; ++c) {
    const std::size_t imax = base + static_cast<std::size_t>(c) * spc + spc / 4;
    const std::size_t imin = base + static_cast<std::size_t>(c) * spc + 3 * spc / 4;
    if (imin >= trace.size()) {
      throw ConfigError("extract_extrema: trace does not cover the cyclic stage");
    }
    rec.max_strain.push_back(trace.eps11[imax]);
    rec.min_strain.push_back(trace.eps11[imin]);
    rec.theta_at_max.push_back(trace.theta[imax]);
  }
  rec.validate();
  return rec;
}

namespace {

std::filesystem::path sidecar_path(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".meta.json");
  return p;
}

}  // namespace

void write_trace_csv(const SimulationTrace& trace, const std::string& path) {
  CsvTable t;
  t.header = {"time_s", "sigma11_MPa", "eps11",  "eps11_inelastic",
              "theta_K", "s",          "s_eps",  "dissipation_J_per_kg"};
  t.rows.reserve(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    t.rows.push_back({trace.time[i], trace.sigma11[i], trace.eps11[i],
                      trace.eps11_i[i], trace.theta[i], trace.s[i],
                      trace.s_eps[i], trace.dissipation[i]});
  }
  write_csv(path, t);
}

void write_record_csv(const ExperimentRecord& record, const std::string& path) {
  record.validate();
  CsvTable t;
  t.header = {"cycle", "max_strain", "min_strain"};
  for (int c = 0; c < record.n_cycles(); ++c) {
    t.rows.push_back({static_cast<double>(c + 1), record.max_strain[c],
                      record.min_strain[c]});
  }
  write_csv(path, t);

  nlohmann::json meta;
  meta["sigma_m_MPa"] = record.meta.sigma_m;
  meta["sigma_a_max_MPa"] = record.meta.sigma_a_max;
  meta["amplitude_start_MPa"] = record.meta.amplitude_start;
  meta["n_cycles"] = record.meta.n_cycles;
  meta["period_s"] = record.meta.period;
  meta["ramp_s"] = record.meta.ramp_s;
  meta["hold_s"] = record.meta.hold_s;
  meta["unload_s"] = record.meta.unload_s;
  if (!record.meta.provenance.empty()) {
    meta["provenance"] = nlohmann::json::parse(record.meta.provenance);
  } else {
    meta["provenance"] = nullptr;
  }
  if (!record.theta_at_max.empty()) meta["theta_at_max_K"] = record.theta_at_max;
  std::ofstream out(sidecar_path(path), std::ios::binary);
  if (!out) throw ConfigError("cannot write record sidecar for '" + path + "'");
  out << meta.dump(2) << "\n";
}

ExperimentRecord read_record_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.header != std::vector<std::string>{"cycle", "max_strain", "min_strain"}) {
    throw ConfigError("record CSV '" + path + "' has an unexpected header");
  }
  ExperimentRecord rec;
  for (const auto& row : t.rows) {
    rec.max_strain.push_back(row[1]);
    rec.min_strain.push_back(row[2]);
  }
  const auto side = sidecar_path(path);
  std::ifstream in(side);
  if (!in) {
    throw ConfigError("record sidecar '" + side.string() + "' not found");
  }
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse record sidecar: " + std::string(e.what()));
  }
  rec.meta.sigma_m = meta.at("sigma_m_MPa").get<double>();
  rec.meta.sigma_a_max = meta.at("sigma_a_max_MPa").get<double>();
  rec.meta.amplitude_start = meta.at("amplitude_start_MPa").get<double>();
  rec.meta.n_cycles = meta.at("n_cycles").get<int>();
  rec.meta.period = meta.at("period_s").get<double>();
  rec.meta.ramp_s = meta.value("ramp_s", 0.0);
  rec.meta.hold_s = meta.value("hold_s", 0.0);
  rec.meta.unload_s = meta.value("unload_s", 0.0);
  if (meta.contains("provenance") && !meta["provenance"].is_null()) {
    rec.meta.provenance = meta["provenance"].dump();
  }
  if (meta.contains("theta_at_max_K")) {
    rec.theta_at_max = meta["theta_at_max_K"].get<std::vector<double>>();
  }
  rec.validate();
  return rec;
}

LoadingProgram program_from_record(const ExperimentRecord& record) {
  const auto& m = record.meta;
  std::vector<Segment> segs;
  segs.push_back(MonotonicRamp{0.0, m.sigma_m, m.ramp_s});
  segs.push_back(Hold{m.sigma_m, m.hold_s});
  segs.push_back(HarmonicCycles{m.sigma_m, m.amplitude_start, m.sigma_a_max,
                                m.n_cycles, m.period});
  segs.push_back(Unload{m.unload_s});
  return LoadingProgram(std::move(segs));
}

}  // namespace ratchet
