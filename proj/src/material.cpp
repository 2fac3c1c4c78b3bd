// Copyright (c) the ratchet developers. See the top-level LICENSE file.
// SPDX-License-Identifier: Apache-2.0

#include "ratchet/material.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ratchet/errors.hpp"

namespace ratchet {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

void ElasticThermalParams::validate() const {
  require(k > 0.0, "bulk modulus k must be positive");
  require(mu > 0.0, "shear modulus mu must be positive");
  require(rho > 0.0, "density rho must be positive");
  require(theta0 > 0.0, "reference temperature theta0 must be positive");
  require(omega >= 0.0, "heat-exchange coefficient omega must be >= 0");
}

std::string to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::AF: return "AF";
    case ModelFamily::OW1: return "OW1";
    case ModelFamily::OW2: return "OW2";
  }
  return "?";
}

ModelFamily model_family_from_string(const std::string& s) {
  if (s == "AF") return ModelFamily::AF;
  if (s == "OW1") return ModelFamily::OW1;
  if (s == "OW2") return ModelFamily::OW2;
  throw ConfigError("unknown model family '" + s + "' (expected AF, OW1 or OW2)");
}

void MaterialParams::validate() const {
  elastic_thermal.validate();
  require(n_branches() >= 2 && n_branches() <= 4,
          "n_branches must be between 2 and 4");
  require(yield_stress > 0.0, "initial yield stress K must be positive");
  if (!viscosity.rate_independent) {
    require(viscosity.eta > 0.0, "viscous mode requires eta > 0");
    require(viscosity.m_perzyna > 0.0, "m_perzyna must be positive");
  }
  if (const auto* v = std::get_if<VoceHardening>(&hardening)) {
    require(v->p2 > 0.0, "Voce p2 must be positive");
  }
  int n_unbounded = 0;
  for (const auto& b : branches) {
    require(b.c > 0.0, "branch stiffness c must be positive");
    if (family == ModelFamily::AF) {
      require(b.kappa >= 0.0, "AF kappa must be >= 0");
      require(!b.unbounded, "unbounded branches are an OW-I concept");
    } else if (b.unbounded) {
      ++n_unbounded;
    } else {
      require(b.r > 0.0, "micro yield stress r must be positive");
    }
  }
  if (family == ModelFamily::OW1) {
    require(n_unbounded == 1, "OW-I needs exactly one unbounded branch");
  } else {
    require(n_unbounded == 0, "only OW-I may carry an unbounded branch");
  }
  if (family == ModelFamily::OW2) {
    require(ow2_m > 0.0, "OW-II exponent m must be positive");
  }
}

MaterialState MaterialState::initial(const MaterialParams& p) {
  MaterialState st;
  st.eps_li.assign(p.branches.size(), SymTensor{});
  st.theta = p.elastic_thermal.theta0;
  return st;
}

SymTensor hooke_stress(const SymTensor& eps_m, const SymTensor& eps_i,
                       const ElasticThermalParams& p) {
  const SymTensor eps_e = eps_m - eps_i;
  SymTensor sig = 2.0 * p.mu * deviator(eps_e);
  const double vol = p.k * eps_e.trace();
  sig.xx += vol;
  sig.yy += vol;
  sig.zz += vol;
  return sig;
}

SymTensor elastic_strain(const SymTensor& sigma, const ElasticThermalParams& p) {
  SymTensor eps = (1.0 / (2.0 * p.mu)) * deviator(sigma);
  const double vol = sigma.trace() / (9.0 * p.k);
  eps.xx += vol;
  eps.yy += vol;
  eps.zz += vol;
  return eps;
}

SymTensor backstress(const SymTensor& eps_i, const SymTensor& eps_li, double c_l) {
  return c_l * deviator(eps_i - eps_li);
}

SymTensor effective_stress(const SymTensor& sigma,
                           std::span<const SymTensor> backstresses) {
  SymTensor out = sigma;
  for (const auto& x : backstresses) out -= x;
  return out;
}

double isotropic_hardening(double s, double s_eps, const HardeningRule& rule) {
  if (const auto* nh = std::get_if<NewHardening>(&rule)) {
    return nh->gamma * s - nh->beta * s_eps;
  }
  const auto& v = std::get<VoceHardening>(rule);
  return v.p1 / v.p2 * (1.0 - std::exp(-v.p2 * s));
}

Overstress overstress_and_rate(const SymTensor& sigma_eff, double K, double R,
                               double eta, double m_perzyna) {
  Overstress out;
  out.f = frobenius_norm(deviator(sigma_eff)) - std::sqrt(2.0 / 3.0) * (K + R);
  if (out.f > 0.0 && eta > 0.0) {
    out.lambda_i = std::pow(out.f / kPerzynaF0, m_perzyna) / eta;
  }
  return out;
}

SymTensor flow_direction(const SymTensor& sigma_eff) {
  const SymTensor dev = deviator(sigma_eff);
  const double n = frobenius_norm(dev);
  if (n <= 0.0) {
    throw NumericalError("flow_direction: zero effective stress deviator");
  }
  return (1.0 / n) * dev;
}

SymTensor branch_rate_af(double lambda_i, double kappa_l, const SymTensor& X_l) {
  return (lambda_i * kappa_l) * X_l;
}

SymTensor branch_rate_ow1(const SymTensor& eps_i_rate, const SymTensor& X_l,
                          double r_l, double c_l, bool unbounded) {
  (void)c_l;
  if (unbounded) return SymTensor{};
  const double radius = std::sqrt(2.0 / 3.0) * r_l;
  const double xn = frobenius_norm(X_l);
  if (xn > radius * (1.0 + 1.0e-8)) {
    throw NumericalError("branch_rate_ow1: backstress beyond micro-surface");
  }
  if (xn < radius * (1.0 - 1.0e-9)) return SymTensor{};  // Kuhn-Tucker interior
  // On the surface: keep ||X_l|| from growing, d/dt ||X||^2 <= 0 requires
  // lambda_li = <eps_i_rate : X_hat>.
  const SymTensor xhat = (1.0 / xn) * X_l;
  const double q = double_contract(eps_i_rate, xhat);
  if (q <= 0.0) return SymTensor{};
  return q * xhat;
}

SymTensor branch_rate_ow2(const SymTensor& eps_i_rate, const SymTensor& X_l,
                          double r_l, double m) {
  const double xn = frobenius_norm(X_l);
  if (xn <= 0.0) return SymTensor{};  // continuous limit at X_l = 0
  const SymTensor xhat = (1.0 / xn) * X_l;
  const double q = double_contract(eps_i_rate, xhat);
  if (q <= 0.0) return SymTensor{};
  const double w = std::pow(std::sqrt(2.0 / 3.0) * xn / r_l, m);
  return (w * q) * xhat;
}

double dissipation_rate(const SymTensor& sigma_eff,
                        std::span<const SymTensor> backstresses,
                        const SymTensor& eps_i_rate,
                        std::span<const SymTensor> branch_rates, double rho) {
  double mech = double_contract(sigma_eff, eps_i_rate);
  for (std::size_t l = 0; l < backstresses.size(); ++l) {
    mech += double_contract(backstresses[l], branch_rates[l]);
  }
  return mech * kMPaToPa / rho;
}

ThermoPotentials free_energy_and_entropy(const MaterialState& state,
                                         const SymTensor& eps_e,
                                         const MaterialParams& p) {
  const auto& et = p.elastic_thermal;
  if (state.theta <= 0.0) {
    throw ConfigError("free_energy_and_entropy: non-positive temperature");
  }
  const SymTensor dev_e = deviator(eps_e);
  double rho_psi = 0.5 * et.k * eps_e.trace() * eps_e.trace() +
                   et.mu * double_contract(dev_e, dev_e);
  for (std::size_t l = 0; l < p.branches.size(); ++l) {
    const SymTensor dev_le = deviator(state.eps_i - state.eps_li[l]);
    rho_psi += 0.5 * p.branches[l].c * double_contract(dev_le, dev_le);
  }
  ThermoPotentials out;
  // c_theta0 enters per unit mass; the MPa strain-energy terms need SI scaling.
  const double theta_term =
      -et.c_theta0_over_rho *
      (state.theta * std::log(state.theta / et.theta0) - (state.theta - et.theta0));
  out.psi = rho_psi * kMPaToPa / et.rho + theta_term;

  const SymTensor sigma = hooke_stress(eps_e, SymTensor{}, et);
  out.zeta = et.c_theta0_over_rho * std::log(state.theta / et.theta0) +
             et.alpha / (3.0 * et.rho) * sigma.trace() * kMPaToPa;
  return out;
}

namespace {

double get_num(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw ConfigError(std::string("missing or non-numeric field '") + key + "'");
  }
  return j[key].get<double>();
}

}  // namespace

MaterialParams params_from_json(const nlohmann::json& j) {
  MaterialParams p;
  try {
    p.family = model_family_from_string(j.at("model").get<std::string>());
    const auto& et = j.at("elastic_thermal");
    p.elastic_thermal.k = get_num(et, "k_MPa");
    p.elastic_thermal.mu = get_num(et, "mu_MPa");
    p.elastic_thermal.alpha = get_num(et, "alpha_per_K");
    p.elastic_thermal.theta0 = get_num(et, "theta0_K");
    p.elastic_thermal.c_theta0_over_rho = get_num(et, "c_theta0_over_rho_J_per_kgK");
    p.elastic_thermal.rho = get_num(et, "rho_kg_per_m3");
    p.elastic_thermal.omega = get_num(et, "omega_J_per_skgK");

    const auto& h = j.at("hardening");
    const std::string rule = h.at("rule").get<std::string>();
    if (rule == "new") {
      p.hardening = NewHardening{get_num(h, "gamma_MPa"), get_num(h, "beta_MPa")};
    } else if (rule == "voce") {
      p.hardening = VoceHardening{get_num(h, "p1_MPa2"), get_num(h, "p2_MPa")};
    } else {
      throw ConfigError("hardening rule must be 'new' or 'voce'");
    }

    p.yield_stress = get_num(j, "yield_K_MPa");
    if (j.contains("viscosity")) {
      const auto& v = j["viscosity"];
      p.viscosity.rate_independent = v.value("rate_independent", true);
      p.viscosity.eta = v.value("eta_MPa_s", 1.0);
      p.viscosity.m_perzyna = v.value("m_perzyna", 1.0);
    }

    for (const auto& bj : j.at("branches")) {
      Branch b;
      b.c = get_num(bj, "c_MPa");
      if (p.family == ModelFamily::AF) {
        b.kappa = get_num(bj, "kappa_per_MPa");
      } else if (bj.value("unbounded", false)) {
        b.unbounded = true;
      } else {
        b.r = get_num(bj, "r_MPa");
      }
      p.branches.push_back(b);
    }
    if (p.family == ModelFamily::OW2) p.ow2_m = get_num(j, "m_exponent");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid parameter JSON: ") + e.what());
  }
  p.validate();
  return p;
}

nlohmann::json params_to_json(const MaterialParams& p) {
  nlohmann::json j;
  j["model"] = to_string(p.family);
  j["n_branches"] = p.n_branches();
  j["elastic_thermal"] = {
      {"k_MPa", p.elastic_thermal.k},
      {"mu_MPa", p.elastic_thermal.mu},
      {"alpha_per_K", p.elastic_thermal.alpha},
      {"theta0_K", p.elastic_thermal.theta0},
      {"c_theta0_over_rho_J_per_kgK", p.elastic_thermal.c_theta0_over_rho},
      {"rho_kg_per_m3", p.elastic_thermal.rho},
      {"omega_J_per_skgK", p.elastic_thermal.omega}};
  if (const auto* nh = std::get_if<NewHardening>(&p.hardening)) {
    j["hardening"] = {{"rule", "new"}, {"gamma_MPa", nh->gamma}, {"beta_MPa", nh->beta}};
  } else {
    const auto& v = std::get<VoceHardening>(p.hardening);
    j["hardening"] = {{"rule", "voce"}, {"p1_MPa2", v.p1}, {"p2_MPa", v.p2}};
  }
  j["yield_K_MPa"] = p.yield_stress;
  j["viscosity"] = {{"rate_independent", p.viscosity.rate_independent},
                    {"eta_MPa_s", p.viscosity.eta},
                    {"m_perzyna", p.viscosity.m_perzyna}};
  j["branches"] = nlohmann::json::array();
  for (const auto& b : p.branches) {
    nlohmann::json bj = {{"c_MPa", b.c}};
    if (p.family == ModelFamily::AF) {
      bj["kappa_per_MPa"] = b.kappa;
    } else if (b.unbounded) {
      bj["unbounded"] = true;
    } else {
      bj["r_MPa"] = b.r;
    }
    j["branches"].push_back(bj);
  }
  if (p.family == ModelFamily::OW2) j["m_exponent"] = p.ow2_m;
  return j;
}

MaterialParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open parameter file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse '" + path + "': " + e.what());
  }
  return params_from_json(j);
}

void save_params(const MaterialParams& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write parameter file '" + path + "'");
  out << params_to_json(p).dump(2) << "\n";
}

}  // namespace ratchet
