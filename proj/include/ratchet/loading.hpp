// Copyright (c) the ratchet developers. See the top-level LICENSE file.
// SPDX-License-Identifier: Apache-2.0

#ifndef RATCHET_LOADING_HPP
#define RATCHET_LOADING_HPP

#include <optional>
#include <variant>
#include <vector>

namespace ratchet {

// Uniaxial stress-controlled loading, piecewise in time. Axial stress in MPa.

struct MonotonicRamp {
  double stress_from = 0.0;
  double stress_to = 0.0;
  double duration = 0.0;  // s
};

struct Hold {
  double stress = 0.0;
  double duration = 0.0;
};

// Harmonic cycles about a fixed mean. The amplitude is constant within each
// cycle and steps linearly in the cycle index from amplitude_from to
// amplitude_to (inclusive), so the per-cycle stress extrema are exact and the
// block peak equals mean + amplitude_to.
struct HarmonicCycles {
  double mean = 0.0;
  double amplitude_from = 0.0;
  double amplitude_to = 0.0;
  int n_cycles = 0;
  double period = 1.0;

  double amplitude(int cycle) const {
    if (n_cycles <= 1) return amplitude_to;
    return amplitude_from +
           (amplitude_to - amplitude_from) * cycle / (n_cycles - 1);
  }
};

// Ramp back to zero stress from wherever the previous segment ended.
struct Unload {
  double duration = 0.0;
};

using Segment = std::variant<MonotonicRamp, Hold, HarmonicCycles, Unload>;

class LoadingProgram {
public:
  LoadingProgram() = default;
  // Validates contiguity in stress and the nondecreasing-amplitude rule.
  explicit LoadingProgram(std::vector<Segment> segments);

  const std::vector<Segment>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }
  double duration() const;
  double stress_at(double t) const;
  double peak_stress() const;

  // Start time and value of the (single) harmonic block, if present.
  std::optional<std::pair<double, HarmonicCycles>> cyclic_block() const;

private:
  std::vector<Segment> segments_;
  std::vector<double> start_times_;
  std::vector<double> start_stress_;
};

struct StageDurations {
  double ramp = 60.0;    // s, stage 1 (non-paper default)
  double hold = 60.0;    // s, stage 2
  double period = 1.0;   // s per cycle, stage 3
  double unload = 30.0;  // s, stage 4
};

// Four-stage program: ramp 0 -> sigma_m, hold, harmonic cycles with the
// amplitude ramping from amplitude_start_frac*sigma_a_max to sigma_a_max,
// unload to zero.
LoadingProgram make_experiment_program(double sigma_m, double sigma_a_max,
                                       int n_cycles,
                                       const StageDurations& stages = {},
                                       double amplitude_start_frac = 0.05,
                                       double stress_ceiling = 2000.0);

// Pulsating program from zero stress: triangular cycles 0 -> peak_j -> 0 with
// peaks increasing linearly up to sigma_max_final.
LoadingProgram make_metric_program(int n_cycles, double sigma_max_final,
                                   double period);

// Default metric program used when the run configuration does not override
// it. Chosen so the accumulated plastic arc-length stays within the range of
// the calibration experiments.
inline constexpr int kDefaultMetricCycles = 16;
inline constexpr double kDefaultMetricSigmaMax = 875.0;
inline constexpr double kDefaultMetricPeriod = 1.0;
LoadingProgram default_metric_program();

}  // namespace ratchet

#endif
