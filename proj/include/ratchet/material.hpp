// Copyright (c) the ratchet developers. See the top-level LICENSE file.
// SPDX-License-Identifier: Apache-2.0

#ifndef RATCHET_MATERIAL_HPP
#define RATCHET_MATERIAL_HPP

#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ratchet/tensor.hpp"

namespace ratchet {

// Stress unit is MPa throughout; the heat equation converts to SI internally.
constexpr double kMPaToPa = 1.0e6;

// Perzyna reference overstress f0 (MPa), fixed.
constexpr double kPerzynaF0 = 1.0;

struct ElasticThermalParams {
  double k = 98037.0;                 // bulk modulus, MPa
  double mu = 37593.0;                // shear modulus, MPa
  double alpha = 1.59e-5;             // volumetric thermal expansion, 1/K
  double theta0 = 293.15;             // reference temperature, K
  double c_theta0_over_rho = 526.0;   // heat capacity per unit mass, J/(kg K)
  double rho = 4550.0;                // mass density, kg/m^3
  double omega = 2.5e-2;              // heat-exchange coefficient, J/(s kg K)

  void validate() const;  // throws ConfigError
};

enum class ModelFamily { AF, OW1, OW2 };

std::string to_string(ModelFamily f);
ModelFamily model_family_from_string(const std::string& s);

// R = gamma*s - beta*s_eps. Covers both hardening and softening.
struct NewHardening {
  double gamma = 0.0;  // MPa
  double beta = 0.0;   // MPa (listed dimensionless in some sources; see README)
};

// Classical saturating rule R(s) = p1/p2 * (1 - exp(-p2 s)).
struct VoceHardening {
  double p1 = 0.0;  // MPa^2
  double p2 = 1.0;  // MPa, > 0
};

using HardeningRule = std::variant<NewHardening, VoceHardening>;

struct Branch {
  double c = 0.0;          // branch stiffness, MPa
  double kappa = 0.0;      // AF saturation, 1/MPa
  double r = 0.0;          // micro yield stress, MPa (OW-I bounded, OW-II)
  bool unbounded = false;  // OW-I: branch stays purely elastic
};

struct Viscosity {
  bool rate_independent = true;  // consistency-enforcing return when true
  double eta = 1.0;              // MPa s
  double m_perzyna = 1.0;
};

struct MaterialParams {
  ElasticThermalParams elastic_thermal;
  ModelFamily family = ModelFamily::AF;
  HardeningRule hardening = NewHardening{};
  double yield_stress = 0.0;  // initial uniaxial yield stress K, MPa
  Viscosity viscosity;
  std::vector<Branch> branches;  // 2..4 entries
  double ow2_m = 2.0;            // OW-II exponent

  int n_branches() const { return static_cast<int>(branches.size()); }
  bool uses_voce() const { return std::holds_alternative<VoceHardening>(hardening); }
  void validate() const;  // throws ConfigError
};

struct MaterialState {
  SymTensor eps_i;                 // inelastic strain
  std::vector<SymTensor> eps_li;   // per-branch dissipative strain
  double s = 0.0;                  // accumulated plastic arc-length
  double s_eps = 0.0;              // accumulated total strain arc-length
  double theta = 293.15;           // K

  static MaterialState initial(const MaterialParams& p);
};

// sigma = k tr(eps_m - eps_i) 1 + 2 mu (eps_m - eps_i)^D
SymTensor hooke_stress(const SymTensor& eps_m, const SymTensor& eps_i,
                       const ElasticThermalParams& p);

// Inverse of Hooke's law: the elastic strain carried by a given stress.
SymTensor elastic_strain(const SymTensor& sigma, const ElasticThermalParams& p);

// X_l = c_l (eps_i - eps_li)^D
SymTensor backstress(const SymTensor& eps_i, const SymTensor& eps_li, double c_l);

// sigma_eff = sigma - sum X_l
SymTensor effective_stress(const SymTensor& sigma,
                           std::span<const SymTensor> backstresses);

double isotropic_hardening(double s, double s_eps, const HardeningRule& rule);

struct Overstress {
  double f = 0.0;         // MPa
  double lambda_i = 0.0;  // 1/s, Perzyna rate; zero when f <= 0
};

// f = ||(sigma_eff)^D|| - sqrt(2/3) (K + R);  lambda_i = <f/f0>^m / eta
Overstress overstress_and_rate(const SymTensor& sigma_eff, double K, double R,
                               double eta, double m_perzyna);

// Unit-norm deviatoric flow direction. Throws NumericalError on a zero
// deviator (caller must treat lambda_i = 0 in that case).
SymTensor flow_direction(const SymTensor& sigma_eff);

// eps_li rate of one AF branch: lambda_i * kappa_l * X_l
SymTensor branch_rate_af(double lambda_i, double kappa_l, const SymTensor& X_l);

// eps_li rate of one OW-I branch under Kuhn-Tucker consistency. Interior or
// unbounded branches return zero; on the micro-surface the rate keeps the
// backstress on the surface. Throws NumericalError when ||X_l|| exceeds the
// surface beyond tolerance.
SymTensor branch_rate_ow1(const SymTensor& eps_i_rate, const SymTensor& X_l,
                          double r_l, double c_l, bool unbounded = false);

// eps_li rate of one OW-II branch:
// (sqrt(2/3) ||X_l|| / r_l)^m <eps_i_rate : X_l/||X_l||> X_l/||X_l||
// Zero at X_l = 0 (continuous limit).
SymTensor branch_rate_ow2(const SymTensor& eps_i_rate, const SymTensor& X_l,
                          double r_l, double m);

// Mechanical dissipation per unit mass, W/kg (stresses in MPa).
double dissipation_rate(const SymTensor& sigma_eff,
                        std::span<const SymTensor> backstresses,
                        const SymTensor& eps_i_rate,
                        std::span<const SymTensor> branch_rates, double rho);

struct ThermoPotentials {
  double psi = 0.0;   // Helmholtz free energy per unit mass, J/kg
  double zeta = 0.0;  // entropy per unit mass, J/(kg K)
};

ThermoPotentials free_energy_and_entropy(const MaterialState& state,
                                         const SymTensor& eps_e,
                                         const MaterialParams& p);

MaterialParams params_from_json(const nlohmann::json& j);
nlohmann::json params_to_json(const MaterialParams& p);
MaterialParams load_params(const std::string& path);
void save_params(const MaterialParams& p, const std::string& path);

}  // namespace ratchet

#endif
