// Copyright (c) the ratchet developers. See the top-level LICENSE file.
// SPDX-License-Identifier: Apache-2.0

#ifndef RATCHET_TESTS_SUPPORT_HPP
#define RATCHET_TESTS_SUPPORT_HPP

#include <cstdint>

#include "ratchet/material.hpp"

namespace ratchet::testing {

// Deterministic xorshift generator for test data; the library itself draws
// all randomness from the Sobol configuration.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  std::uint64_t next() {
    state_ ^= state_ << 13;
    state_ ^= state_ >> 7;
    state_ ^= state_ << 17;
    return state_;
  }
  double uniform() {  // in (0, 1)
    return (next() >> 11) * (1.0 / 9007199254740992.0) + 5e-17;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::uint64_t state_;
};

inline SymTensor random_tensor(Rng& rng, double scale = 1.0) {
  return {rng.uniform(-scale, scale), rng.uniform(-scale, scale),
          rng.uniform(-scale, scale), rng.uniform(-scale, scale),
          rng.uniform(-scale, scale), rng.uniform(-scale, scale)};
}

// Unit deviator along the uniaxial direction.
inline SymTensor uniaxial_unit_deviator() {
  const double a = std::sqrt(2.0 / 3.0);
  return SymTensor::diag(a, -a / 2.0, -a / 2.0);
}

// VT6-like titanium constants used as the shared test fixture.
inline ElasticThermalParams ti64_elastic_thermal() {
  ElasticThermalParams et;
  et.k = 98037.0;
  et.mu = 37593.0;
  et.alpha = 1.59e-5;
  et.theta0 = 293.15;
  et.c_theta0_over_rho = 526.0;
  et.rho = 4550.0;
  et.omega = 2.5e-2;
  return et;
}

inline MaterialParams af_params_2() {
  MaterialParams p;
  p.elastic_thermal = ti64_elastic_thermal();
  p.family = ModelFamily::AF;
  p.hardening = NewHardening{8094.2, 3.7978};
  p.yield_stress = 862.86;
  p.branches = {{12005.0, 0.0360, 0.0, false}, {143832.0, 0.0906, 0.0, false}};
  return p;
}

inline MaterialParams af_params_3() {
  MaterialParams p = af_params_2();
  p.hardening = NewHardening{5736.0, 3.5277};
  p.yield_stress = 847.26;
  p.branches = {{7777.4, 0.0352, 0.0, false},
                {18789.0, 0.0527, 0.0, false},
                {109793.0, 0.0866, 0.0, false}};
  return p;
}

inline MaterialParams af_params_4() {
  MaterialParams p = af_params_2();
  p.hardening = NewHardening{4176.2, 4.0121};
  p.yield_stress = 846.73;
  p.branches = {{4294.6, 0.0227, 0.0, false},
                {8232.5, 0.0366, 0.0, false},
                {21724.0, 0.0646, 0.0, false},
                {117736.0, 0.0797, 0.0, false}};
  return p;
}

inline MaterialParams ow1_params_2() {
  MaterialParams p;
  p.elastic_thermal = ti64_elastic_thermal();
  p.family = ModelFamily::OW1;
  p.hardening = NewHardening{4527.7, 4.0919};
  p.yield_stress = 884.69;
  p.branches = {{7329.5, 0.0, 30.702, false}, {4714.3, 0.0, 0.0, true}};
  return p;
}

inline MaterialParams ow2_params_2() {
  MaterialParams p;
  p.elastic_thermal = ti64_elastic_thermal();
  p.family = ModelFamily::OW2;
  p.hardening = NewHardening{8957.3, 3.6190};
  p.yield_stress = 757.30;
  p.branches = {{214914.0, 0.0, 101.26, false}, {18441.0, 0.0, 39.032, false}};
  p.ow2_m = 2.9817;
  return p;
}

}  // namespace ratchet::testing

#endif
