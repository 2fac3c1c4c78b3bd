// Copyright (c) the ratchet developers. See the top-level LICENSE file.
// SPDX-License-Identifier: Apache-2.0

#ifndef RATCHET_ERRORS_HPP
#define RATCHET_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace ratchet {

// Bad user input: parameters, programs, configs, malformed files.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Solver breakdown: corrector non-convergence, inadmissible states,
// failed linear solves.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Rank-deficient Jacobian detected during factorization. Carrying the
// offending column indices; callers treat this as an overparametrization
// hard flag.
class RankDeficientError : public NumericalError {
public:
  RankDeficientError(const std::string& msg, std::vector<int> columns)
      : NumericalError(msg), columns_(std::move(columns)) {}
  const std::vector<int>& columns() const { return columns_; }

private:
  std::vector<int> columns_;
};

}  // namespace ratchet

#endif
