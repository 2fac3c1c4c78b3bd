// Copyright (c) the ratchet developers. See the top-level LICENSE file.
// SPDX-License-Identifier: Apache-2.0

#ifndef RATCHET_TENSOR_HPP
#define RATCHET_TENSOR_HPP

#include <cmath>

namespace ratchet {

// Symmetric second-order tensor, six independent components. Off-diagonal
// duplication is handled inside the norm/contraction so that callers never
// deal with Voigt factors.
struct SymTensor {
  double xx = 0.0, yy = 0.0, zz = 0.0;
  double xy = 0.0, xz = 0.0, yz = 0.0;

  static SymTensor identity() { return {1.0, 1.0, 1.0, 0.0, 0.0, 0.0}; }
  static SymTensor diag(double a, double b, double c) {
    return {a, b, c, 0.0, 0.0, 0.0};
  }

  double trace() const { return xx + yy + zz; }

  SymTensor& operator+=(const SymTensor& o) {
    xx += o.xx; yy += o.yy; zz += o.zz;
    xy += o.xy; xz += o.xz; yz += o.yz;
    return *this;
  }
  SymTensor& operator-=(const SymTensor& o) {
    xx -= o.xx; yy -= o.yy; zz -= o.zz;
    xy -= o.xy; xz -= o.xz; yz -= o.yz;
    return *this;
  }
  SymTensor& operator*=(double a) {
    xx *= a; yy *= a; zz *= a;
    xy *= a; xz *= a; yz *= a;
    return *this;
  }
};

inline SymTensor operator+(SymTensor a, const SymTensor& b) { return a += b; }
inline SymTensor operator-(SymTensor a, const SymTensor& b) { return a -= b; }
inline SymTensor operator*(double s, SymTensor a) { return a *= s; }
inline SymTensor operator*(SymTensor a, double s) { return a *= s; }
inline SymTensor operator-(SymTensor a) { return a *= -1.0; }

// A^D = A - (1/3) tr(A) 1
inline SymTensor deviator(const SymTensor& a) {
  const double p = a.trace() / 3.0;
  return {a.xx - p, a.yy - p, a.zz - p, a.xy, a.xz, a.yz};
}

// Full 3x3 contraction a:b, off-diagonal components counted twice.
inline double double_contract(const SymTensor& a, const SymTensor& b) {
  return a.xx * b.xx + a.yy * b.yy + a.zz * b.zz +
         2.0 * (a.xy * b.xy + a.xz * b.xz + a.yz * b.yz);
}

inline double frobenius_norm(const SymTensor& a) {
  return std::sqrt(double_contract(a, a));
}

}  // namespace ratchet

#endif
