// Copyright (c) the ratchet developers. See the top-level LICENSE file.
// SPDX-License-Identifier: Apache-2.0

#ifndef RATCHET_SIMULATE_HPP
#define RATCHET_SIMULATE_HPP

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ratchet/loading.hpp"
#include "ratchet/material.hpp"

namespace ratchet {

struct SimOptions {
  double stress_tol = 1.0e-6;  // MPa, stress-control verification tolerance
  int steps_per_cycle = 40;    // >= 40 and divisible by 4
  int ramp_steps = 200;        // nodes per monotonic ramp / unload stage
  int hold_steps = 16;
  int metric_ramp_steps = 40;  // nodes per half-pulse of a metric program
  bool thermal = false;        // evolve temperature (isothermal otherwise)
  int state_stride = 0;        // store full state every N nodes (0 = never)
  int max_substep_depth = 40;
  int max_direction_iters = 50;

  void validate() const;
};

SimOptions sim_options_from_json(const nlohmann::json& j);
nlohmann::json sim_options_to_json(const SimOptions& o);

struct TraceDiagnostics {
  // Per-step plastic work terms sigma_eff : deps_i and X_l : deps_li (MPa).
  double min_plastic_work = 0.0;
  double min_branch_work = 0.0;
  double work_scale = 0.0;  // running max magnitude of those terms
  double max_ow1_overshoot = 0.0;    // relative micro-surface violation
  double max_stress_residual = 0.0;  // MPa, Hooke round-trip vs program
  std::size_t total_substeps = 0;
};

struct SimulationTrace {
  std::vector<double> time;      // s
  std::vector<double> sigma11;   // MPa
  std::vector<double> eps11;     // total axial strain
  std::vector<double> eps11_i;   // inelastic axial strain
  std::vector<double> theta;     // K
  std::vector<double> s;         // plastic arc-length
  std::vector<double> s_eps;     // total strain arc-length
  std::vector<double> dissipation;  // cumulative, J/kg

  std::vector<std::size_t> segment_first_node;
  int steps_per_cycle = 0;

  std::vector<std::size_t> state_node;
  std::vector<MaterialState> states;

  TraceDiagnostics diagnostics;

  std::size_t size() const { return time.size(); }
};

struct RecordMeta {
  double sigma_m = 0.0;
  double sigma_a_max = 0.0;
  double amplitude_start = 0.0;
  int n_cycles = 0;
  double period = 0.0;
  double ramp_s = 0.0, hold_s = 0.0, unload_s = 0.0;
  std::string provenance;  // JSON text; empty when not synthetic
};

// Per-cycle strain extrema of the cyclic stage, the unit of identification
// data. Extrema are taken at the stress turning points of the program.
struct ExperimentRecord {
  std::vector<double> max_strain;
  std::vector<double> min_strain;
  std::vector<double> theta_at_max;  // K, optional temperature trace
  RecordMeta meta;

  int n_cycles() const { return static_cast<int>(max_strain.size()); }
  double cyclic_duration() const { return meta.n_cycles * meta.period; }
  // Times of the recorded extrema relative to the cyclic stage start.
  double time_of_max(int cycle) const { return (cycle + 0.25) * meta.period; }
  double time_of_min(int cycle) const { return (cycle + 0.75) * meta.period; }
  void validate() const;
};

SimulationTrace integrate(const MaterialParams& params,
                          const LoadingProgram& program,
                          const SimOptions& opts = {});

ExperimentRecord extract_extrema(const SimulationTrace& trace,
                                 const LoadingProgram& program);

// One step of the gauge-area heat equation
//   c_theta dtheta/dt = -(alpha k theta / rho) tr(deps/dt) + delta_i
//                       - omega (theta - theta0)
// with c_theta = c_theta0/rho - (alpha^2/rho) k theta evaluated at the current
// temperature (errors when c_theta <= 0). tr_eps_rate is the trace of the
// total strain rate (1/s), delta_i in W/kg.
double temperature_step(double theta, double tr_eps_rate, double delta_i,
                        const ElasticThermalParams& p, double dt);

void write_trace_csv(const SimulationTrace& trace, const std::string& path);

// Writes the record CSV (header: cycle,max_strain,min_strain) plus a
// .meta.json sidecar with program metadata and provenance.
void write_record_csv(const ExperimentRecord& record, const std::string& path);
ExperimentRecord read_record_csv(const std::string& path);

// Rebuilds the four-stage experiment program a record was measured under.
LoadingProgram program_from_record(const ExperimentRecord& record);

}  // namespace ratchet

#endif
