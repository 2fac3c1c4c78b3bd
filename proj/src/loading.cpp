// Copyright (c) the ratchet developers. See the top-level LICENSE file.
// SPDX-License-Identifier: Apache-2.0

#include "ratchet/loading.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ratchet/errors.hpp"

namespace ratchet {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kContiguityTol = 1.0e-9;  // MPa

double segment_duration(const Segment& s) {
  return std::visit(
      [](const auto& seg) -> double {
        using T = std::decay_t<decltype(seg)>;
        if constexpr (std::is_same_v<T, HarmonicCycles>) {
          return seg.n_cycles * seg.period;
        } else {
          return seg.duration;
        }
      },
      s);
}

double segment_start_stress(const Segment& s, double prev_end) {
  return std::visit(
      [&](const auto& seg) -> double {
        using T = std::decay_t<decltype(seg)>;
        if constexpr (std::is_same_v<T, MonotonicRamp>) return seg.stress_from;
        if constexpr (std::is_same_v<T, Hold>) return seg.stress;
        if constexpr (std::is_same_v<T, HarmonicCycles>) return seg.mean;
        return prev_end;  // Unload starts where the previous segment ended
      },
      s);
}

double segment_end_stress(const Segment& s, double start) {
  return std::visit(
      [&](const auto& seg) -> double {
        using T = std::decay_t<decltype(seg)>;
        if constexpr (std::is_same_v<T, MonotonicRamp>) return seg.stress_to;
        if constexpr (std::is_same_v<T, Hold>) return seg.stress;
        if constexpr (std::is_same_v<T, HarmonicCycles>) return seg.mean;
        (void)start;
        return 0.0;  // Unload ends at zero
      },
      s);
}

double segment_stress(const Segment& s, double local_t, double start_stress) {
  return std::visit(
      [&](const auto& seg) -> double {
        using T = std::decay_t<decltype(seg)>;
        if constexpr (std::is_same_v<T, MonotonicRamp>) {
          if (seg.duration <= 0.0) return seg.stress_to;
          const double x = std::clamp(local_t / seg.duration, 0.0, 1.0);
          return seg.stress_from + (seg.stress_to - seg.stress_from) * x;
        } else if constexpr (std::is_same_v<T, Hold>) {
          return seg.stress;
        } else if constexpr (std::is_same_v<T, HarmonicCycles>) {
          const int cycle = std::min(
              static_cast<int>(std::floor(local_t / seg.period)), seg.n_cycles - 1);
          const double phase = local_t - cycle * seg.period;
          return seg.mean +
                 seg.amplitude(cycle) * std::sin(2.0 * kPi * phase / seg.period);
        } else {
          if (seg.duration <= 0.0) return 0.0;
          const double x = std::clamp(local_t / seg.duration, 0.0, 1.0);
          return start_stress * (1.0 - x);
        }
      },
      s);
}

}  // namespace

LoadingProgram::LoadingProgram(std::vector<Segment> segments)
    : segments_(std::move(segments)) {
  double t = 0.0;
  double stress = 0.0;
  start_times_.reserve(segments_.size());
  start_stress_.reserve(segments_.size());
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const double start = segment_start_stress(segments_[i], stress);
    if (std::abs(start - stress) > kContiguityTol) {
      throw ConfigError("loading program: segment " + std::to_string(i) +
                        " starts at " + std::to_string(start) +
                        " MPa but the previous segment ends at " +
                        std::to_string(stress) + " MPa");
    }
    if (const auto* h = std::get_if<HarmonicCycles>(&segments_[i])) {
      if (h->n_cycles < 0) throw ConfigError("negative cycle count");
      if (h->period <= 0.0) throw ConfigError("harmonic period must be positive");
      if (h->amplitude_to < h->amplitude_from) {
        throw ConfigError("harmonic amplitude must be nondecreasing");
      }
      if (h->amplitude_from < 0.0) throw ConfigError("negative stress amplitude");
    }
    if (segment_duration(segments_[i]) < 0.0) {
      throw ConfigError("segment duration must be nonnegative");
    }
    start_times_.push_back(t);
    start_stress_.push_back(stress);
    t += segment_duration(segments_[i]);
    stress = segment_end_stress(segments_[i], stress);
  }
}

double LoadingProgram::duration() const {
  if (segments_.empty()) return 0.0;
  return start_times_.back() + segment_duration(segments_.back());
}

double LoadingProgram::stress_at(double t) const {
  if (segments_.empty()) return 0.0;
  if (t <= 0.0) return segment_stress(segments_.front(), 0.0, start_stress_.front());
  std::size_t i = segments_.size() - 1;
  for (std::size_t k = 0; k + 1 < segments_.size(); ++k) {
    if (t < start_times_[k + 1]) {
      i = k;
      break;
    }
  }
  return segment_stress(segments_[i], t - start_times_[i], start_stress_[i]);
}

double LoadingProgram::peak_stress() const {
  double peak = 0.0;
  double stress = 0.0;
  for (const auto& seg : segments_) {
    const double start = segment_start_stress(seg, stress);
    const double end = segment_end_stress(seg, start);
    peak = std::max({peak, std::abs(start), std::abs(end)});
    if (const auto* h = std::get_if<HarmonicCycles>(&seg)) {
      peak = std::max(peak, std::abs(h->mean) + h->amplitude_to);
    }
    stress = end;
  }
  return peak;
}

std::optional<std::pair<double, HarmonicCycles>> LoadingProgram::cyclic_block() const {
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (const auto* h = std::get_if<HarmonicCycles>(&segments_[i])) {
      return std::make_pair(start_times_[i], *h);
    }
  }
  return std::nullopt;
}

LoadingProgram make_experiment_program(double sigma_m, double sigma_a_max,
                                       int n_cycles, const StageDurations& stages,
                                       double amplitude_start_frac,
                                       double stress_ceiling) {
  if (sigma_a_max < 0.0) throw ConfigError("negative stress amplitude");
  if (n_cycles <= 0) throw ConfigError("cycle count must be positive");
  if (sigma_m + sigma_a_max > stress_ceiling) {
    throw ConfigError("peak stress " + std::to_string(sigma_m + sigma_a_max) +
                      " MPa exceeds the configured ceiling");
  }
  if (amplitude_start_frac < 0.0 || amplitude_start_frac > 1.0) {
    throw ConfigError("amplitude_start_frac must be in [0, 1]");
  }
  std::vector<Segment> segs;
  segs.push_back(MonotonicRamp{0.0, sigma_m, stages.ramp});
  segs.push_back(Hold{sigma_m, stages.hold});
  segs.push_back(HarmonicCycles{sigma_m, amplitude_start_frac * sigma_a_max,
                                sigma_a_max, n_cycles, stages.period});
  segs.push_back(Unload{stages.unload});
  return LoadingProgram(std::move(segs));
}

LoadingProgram default_metric_program() {
  return make_metric_program(kDefaultMetricCycles, kDefaultMetricSigmaMax,
                             kDefaultMetricPeriod);
}

LoadingProgram make_metric_program(int n_cycles, double sigma_max_final,
                                   double period) {
  if (n_cycles < 0) throw ConfigError("cycle count must be nonnegative");
  if (period <= 0.0) throw ConfigError("period must be positive");
  std::vector<Segment> segs;
  for (int j = 1; j <= n_cycles; ++j) {
    const double peak = sigma_max_final * j / n_cycles;
    segs.push_back(MonotonicRamp{0.0, peak, 0.5 * period});
    segs.push_back(MonotonicRamp{peak, 0.0, 0.5 * period});
  }
  return LoadingProgram(std::move(segs));
}

}  // namespace ratchet
