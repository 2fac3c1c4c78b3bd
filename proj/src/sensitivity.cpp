// Copyright (c) the ratchet developers. See the top-level LICENSE file.
// SPDX-License-Identifier: Apache-2.0

#include "ratchet/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "ratchet/errors.hpp"
#include "ratchet/parallel.hpp"

namespace ratchet {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kMaxBit = 32;
constexpr double kUniformClamp = 1e-12;  // ln(0) guard

// Primitive polynomials and initial direction numbers of the first 40
// dimensions of the Joe-Kuo table (the D(6)-optimized set with good
// two-dimensional projections).
constexpr std::uint32_t kPoly[40] = {
    1,   3,   7,   11,  13,  19,  25,  37,  41,  47,  55,  59,  61,  67,
    91,  97,  103, 109, 115, 131, 137, 143, 145, 157, 167, 171, 185, 191,
    193, 203, 211, 213, 229, 239, 241, 247, 253, 285, 299, 301};

// kVInit[j][d]: initial m_{j+1} for dimension d+1; zero-padded beyond the
// degree of the dimension's polynomial.
constexpr std::uint32_t kVInit[8][40] = {
    {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1,
     1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1},
    {0, 0, 3, 3, 1, 1, 3, 1, 1, 1, 1, 1, 3, 3, 1, 3, 1, 3, 1, 3,
     3, 1, 3, 3, 3, 1, 3, 1, 3, 1, 3, 3, 3, 1, 1, 1, 3, 3, 3, 3},
    {0, 0, 0, 1, 1, 3, 5, 5, 5, 7, 5, 1, 5, 3, 1, 1, 1, 1, 5, 7,
     7, 3, 5, 1, 1, 5, 5, 7, 7, 3, 5, 7, 1, 5, 7, 7, 3, 1, 5, 1},
    {0, 0, 0, 0, 0, 3, 13, 5, 5, 11, 1, 3, 5, 9, 15, 13, 15, 15, 5, 11,
     13, 13, 9, 13, 5, 11, 3, 13, 5, 9, 13, 3, 3, 5, 7, 9, 5, 15, 15, 11},
    {0, 0, 0, 0, 0, 0, 0, 17, 5, 19, 1, 11, 31, 7, 21, 27, 7, 13, 19, 23,
     13, 7, 1, 9, 27, 19, 3, 1, 13, 25, 23, 13, 5, 23, 1, 13, 3, 31, 31, 11},
    {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 49, 21, 49, 5, 25, 61, 15,
     15, 35, 25, 35, 61, 41, 13, 19, 19, 29, 1, 59, 53, 33, 61, 61, 55, 13, 59, 11},
    {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 103,
     69, 63, 53, 107, 31, 61, 69, 1, 59, 41, 55, 17, 69, 13, 123, 49, 33, 49, 63, 77},
    {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
     0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 245, 97, 249},
};

int poly_degree(std::uint32_t poly) {
  int d = -1;
  while (poly) {
    poly >>= 1;
    ++d;
  }
  return d;
}

}  // namespace

SobolSequence::SobolSequence(int dimensions) : dimensions_(dimensions) {
  if (dimensions < 1 || dimensions > kMaxDimensions) {
    throw ConfigError("Sobol generator supports 1.." +
                      std::to_string(kMaxDimensions) + " dimensions, got " +
                      std::to_string(dimensions));
  }
  v_.assign(static_cast<std::size_t>(dimensions) * kMaxBit, 0);
  for (int d = 0; d < dimensions; ++d) {
    std::uint32_t* v = &v_[static_cast<std::size_t>(d) * kMaxBit];
    if (d == 0) {
      for (int j = 0; j < kMaxBit; ++j) v[j] = 1u << (kMaxBit - 1 - j);
      continue;
    }
    const std::uint32_t poly = kPoly[d];
    const int s = poly_degree(poly);
    for (int j = 0; j < s; ++j) {
      v[j] = kVInit[j][d] << (kMaxBit - 1 - j);
    }
    for (int j = s; j < kMaxBit; ++j) {
      std::uint32_t val = v[j - s] ^ (v[j - s] >> s);
      for (int k = 1; k < s; ++k) {
        if ((poly >> (s - k)) & 1u) val ^= v[j - k];
      }
      v[j] = val;
    }
  }
}

void SobolSequence::point(std::uint64_t index, std::span<double> out) const {
  if (static_cast<int>(out.size()) < dimensions_) {
    throw ConfigError("Sobol point: output span too small");
  }
  if (index >> kMaxBit) {
    throw ConfigError("Sobol point index beyond the generator's resolution");
  }
  const std::uint64_t gray = index ^ (index >> 1);
  constexpr double scale = 1.0 / 4294967296.0;  // 2^-32
  for (int d = 0; d < dimensions_; ++d) {
    const std::uint32_t* v = &v_[static_cast<std::size_t>(d) * kMaxBit];
    std::uint32_t x = 0;
    std::uint64_t g = gray;
    int bit = 0;
    while (g) {
      if (g & 1u) x ^= v[bit];
      g >>= 1;
      ++bit;
    }
    out[d] = x * scale;
  }
}

SobolConfig sobol_config_from_json(const nlohmann::json& j) {
  SobolConfig c;
  c.dimensions = j.value("dimensions", c.dimensions);
  c.skip = j.value("skip", c.skip);
  c.leap = j.value("leap", c.leap);
  c.n_draws = j.value("n_draws", c.n_draws);
  c.antithetic = j.value("antithetic", c.antithetic);
  return c;
}

nlohmann::json sobol_config_to_json(const SobolConfig& c) {
  return {{"dimensions", c.dimensions},
          {"skip", c.skip},
          {"leap", c.leap},
          {"n_draws", c.n_draws},
          {"antithetic", c.antithetic}};
}

Eigen::MatrixXd sobol_normals(const SobolConfig& cfg) {
  if (cfg.dimensions < 2 || cfg.dimensions % 2 != 0) {
    throw ConfigError("sobol_normals: dimensions must be even and >= 2");
  }
  if (cfg.n_draws < 1) throw ConfigError("sobol_normals: n_draws must be >= 1");
  if (cfg.skip < 0 || cfg.leap < 0) {
    throw ConfigError("sobol_normals: skip and leap must be >= 0");
  }
  if (cfg.antithetic && cfg.n_draws % 2 != 0) {
    throw ConfigError("sobol_normals: antithetic draws need an even n_draws");
  }
  const int direct = cfg.antithetic ? cfg.n_draws / 2 : cfg.n_draws;
  SobolSequence seq(cfg.dimensions);
  Eigen::MatrixXd out(cfg.n_draws, cfg.dimensions);
  std::vector<double> u(cfg.dimensions);
  for (int row = 0; row < direct; ++row) {
    // leap points are omitted between consecutive draws (stride leap + 1;
    // odd strides keep base-2 digital nets equidistributed).
    const std::uint64_t index =
        static_cast<std::uint64_t>(cfg.skip) +
        static_cast<std::uint64_t>(row) * static_cast<std::uint64_t>(cfg.leap + 1);
    seq.point(index, u);
    for (int i = 0; i < cfg.dimensions; i += 2) {
      const double u_r = std::clamp(u[i], kUniformClamp, 1.0 - kUniformClamp);
      const double u_a = std::clamp(u[i + 1], kUniformClamp, 1.0 - kUniformClamp);
      const double radius = std::sqrt(-2.0 * std::log(u_r));
      out(row, i) = radius * std::cos(2.0 * kPi * u_a);
      out(row, i + 1) = radius * std::sin(2.0 * kPi * u_a);
    }
  }
  for (int row = direct; row < cfg.n_draws; ++row) {
    out.row(row) = -out.row(row - direct);
  }
  return out;
}

NoiseModel noise_model_from_json(const nlohmann::json& j) {
  NoiseModel m;
  m.sigma = j.value("sigma", m.sigma);
  m.n_modes = j.value("n_modes", m.n_modes);
  if (m.sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
  if (m.n_modes < 1) throw ConfigError("noise n_modes must be >= 1");
  return m;
}

nlohmann::json noise_model_to_json(const NoiseModel& m) {
  return {{"sigma", m.sigma}, {"n_modes", m.n_modes}};
}

Eigen::MatrixXd noise_mode_matrix(const ExperimentRecord& record, int n_modes) {
  if (n_modes < 1) throw ConfigError("n_modes must be >= 1");
  const double T = record.cyclic_duration();
  if (T <= 0.0) throw ConfigError("record has no cyclic duration");
  Eigen::MatrixXd M(2 * record.n_cycles(), n_modes);
  for (int c = 0; c < record.n_cycles(); ++c) {
    const double tmax = record.time_of_max(c);
    const double tmin = record.time_of_min(c);
    for (int k = 0; k < n_modes; ++k) {
      M(2 * c, k) = std::sin((k + 1) * kPi * tmax / T);
      M(2 * c + 1, k) = std::sin((k + 1) * kPi * tmin / T);
    }
  }
  return M;
}

Eigen::VectorXd synthesize_noise(std::span<const double> coeffs,
                                 const ExperimentRecord& record) {
  const int n_modes = static_cast<int>(coeffs.size());
  const Eigen::MatrixXd M = noise_mode_matrix(record, n_modes);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(M.rows());
  for (int k = 0; k < n_modes; ++k) out += coeffs[k] * M.col(k);
  return out;
}

FastRefit::FastRefit(const Eigen::MatrixXd& J, const Eigen::VectorXd& p_star,
                     const Eigen::VectorXd& mod_at_star,
                     const Eigen::VectorXd& exp_vector, double rank_tol)
    : p_star_(p_star) {
  const int n = static_cast<int>(J.cols());
  if (J.rows() < n) throw ConfigError("FastRefit: fewer rows than columns");
  if (p_star.size() != n || mod_at_star.size() != J.rows() ||
      exp_vector.size() != J.rows()) {
    throw ConfigError("FastRefit: inconsistent shapes");
  }

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(J);
  q_ = qr.householderQ() * Eigen::MatrixXd::Identity(J.rows(), n);
  r_ = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();

  double diag_max = 0.0;
  for (int i = 0; i < n; ++i) diag_max = std::max(diag_max, std::abs(r_(i, i)));
  std::vector<int> bad;
  for (int i = 0; i < n; ++i) {
    if (std::abs(r_(i, i)) <= rank_tol * diag_max) bad.push_back(i);
  }
  if (!bad.empty() || diag_max == 0.0) {
    std::string msg = "rank-deficient Jacobian; offending column(s):";
    for (int c : bad) msg += " " + std::to_string(c);
    throw RankDeficientError(msg, bad);
  }

  jt_ = J.transpose();
  normal_ = jt_ * J;
  // Local Cholesky so the normal-equations route shares nothing with the QR
  // factorization above.
  normal_chol_ = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double sum = normal_(i, j);
      for (int k = 0; k < j; ++k) sum -= normal_chol_(i, k) * normal_chol_(j, k);
      if (i == j) {
        if (sum <= 0.0) {
          throw RankDeficientError(
              "normal equations not positive-definite at column " +
                  std::to_string(i),
              {i});
        }
        normal_chol_(i, i) = std::sqrt(sum);
      } else {
        normal_chol_(i, j) = sum / normal_chol_(j, j);
      }
    }
  }

  // Zero-gradient precondition check on the supplied residual.
  const Eigen::VectorXd resid0 = exp_vector - mod_at_star;
  const Eigen::VectorXd grad = -2.0 * (jt_ * resid0);
  for (int i = 0; i < n; ++i) {
    gradient_inf_norm_ = std::max(
        gradient_inf_norm_, std::abs(grad[i]) * std::max(std::abs(p_star[i]), 1.0));
  }
}

Eigen::VectorXd FastRefit::refit_delta(const Eigen::VectorXd& noise) const {
  const Eigen::VectorXd z = q_.transpose() * noise;
  return r_.triangularView<Eigen::Upper>().solve(z);
}

Eigen::VectorXd FastRefit::refit(const Eigen::VectorXd& noise) const {
  return p_star_ + refit_delta(noise);
}

Eigen::VectorXd FastRefit::refit_delta_normal_equations(
    const Eigen::VectorXd& noise) const {
  const Eigen::VectorXd b = jt_ * noise;
  const int n = static_cast<int>(b.size());
  Eigen::VectorXd y(n), delta(n);
  for (int i = 0; i < n; ++i) {
    double sum = b[i];
    for (int k = 0; k < i; ++k) sum -= normal_chol_(i, k) * y[k];
    y[i] = sum / normal_chol_(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    double sum = y[i];
    for (int k = i + 1; k < n; ++k) sum -= normal_chol_(k, i) * delta[k];
    delta[i] = sum / normal_chol_(i, i);
  }
  return delta;
}

Eigen::VectorXd FastRefit::refit_normal_equations(const Eigen::VectorXd& noise) const {
  return p_star_ + refit_delta_normal_equations(noise);
}

Eigen::VectorXd fast_refit(const FastRefit& op, const Eigen::VectorXd& noise) {
  return op.refit(noise);
}

double mechanics_distance(const Eigen::VectorXd& p1, const Eigen::VectorXd& p2,
                          const LoadingProgram& metric_program,
                          const MaterialParams& params_template,
                          const SimOptions& opts) {
  const ParameterLayout layout = ParameterLayout::for_params(params_template);
  const MaterialParams m1 = layout.to_params(p1, params_template);
  const MaterialParams m2 = layout.to_params(p2, params_template);
  m1.validate();
  m2.validate();
  const SimulationTrace t1 = integrate(m1, metric_program, opts);
  const SimulationTrace t2 = integrate(m2, metric_program, opts);
  double d = 0.0;
  for (std::size_t i = 0; i < t1.size(); ++i) {
    d = std::max(d, std::abs(t1.eps11[i] - t2.eps11[i]));
  }
  return d;
}

Eigen::MatrixXd strain_sensitivity(const Eigen::VectorXd& p_star,
                                   const LoadingProgram& metric_program,
                                   const MaterialParams& params_template,
                                   const SimOptions& opts, double rel_step,
                                   int n_threads) {
  const ParameterLayout layout = ParameterLayout::for_params(params_template);
  const int n = layout.size();
  if (p_star.size() != n) throw ConfigError("strain_sensitivity: bad p size");

  auto eps_series = [&](const Eigen::VectorXd& p) {
    const MaterialParams mp = layout.to_params(p, params_template);
    mp.validate();
    const SimulationTrace t = integrate(mp, metric_program, opts);
    return Eigen::Map<const Eigen::VectorXd>(t.eps11.data(), t.eps11.size()).eval();
  };

  const Eigen::VectorXd base = eps_series(p_star);
  Eigen::MatrixXd D(base.size(), n);
  parallel_for(static_cast<std::size_t>(n), n_threads, [&](std::size_t i) {
    const double h = rel_step * std::max(std::abs(p_star[i]), 1e-6);
    Eigen::VectorXd pp = p_star, pm = p_star;
    pp[i] += h;
    pm[i] -= h;
    D.col(i) = (eps_series(pp) - eps_series(pm)) / (2.0 * h);
  });
  return D;
}

double linearized_distance(const Eigen::MatrixXd& d_eps_dp,
                           const Eigen::VectorXd& dp) {
  if (d_eps_dp.cols() != dp.size()) {
    throw ConfigError("linearized_distance: shape mismatch");
  }
  if (d_eps_dp.rows() == 0) return 0.0;
  return (d_eps_dp * dp).cwiseAbs().maxCoeff();
}

double cloud_size(const Eigen::VectorXd& p_star, const Eigen::MatrixXd& draws,
                  const Eigen::MatrixXd& d_eps_dp) {
  if (draws.rows() == 0) throw ConfigError("cloud_size: no draws");
  double sum = 0.0;
  for (int j = 0; j < draws.rows(); ++j) {
    sum += linearized_distance(d_eps_dp, draws.row(j).transpose() - p_star);
  }
  return sum / draws.rows();
}

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& J) {
  const int n = static_cast<int>(J.cols());
  for (int i = 0; i < n; ++i) {
    if (J.col(i).norm() == 0.0) {
      throw RankDeficientError(
          "correlation_matrix: column " + std::to_string(i) +
              " is zero (parameter without influence)",
          {i});
    }
  }
  const Eigen::MatrixXd P = J.transpose() * J;
  Eigen::MatrixXd corr(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      corr(i, j) = P(i, j) / std::sqrt(P(i, i) * P(j, j));
    }
  }
  return corr;
}

SensitivityOptions sensitivity_options_from_json(const nlohmann::json& j) {
  SensitivityOptions o;
  if (j.contains("noise")) o.noise = noise_model_from_json(j["noise"]);
  if (j.contains("sobol")) o.sobol = sobol_config_from_json(j["sobol"]);
  if (j.contains("metric_sim")) o.metric_sim = sim_options_from_json(j["metric_sim"]);
  o.rel_step = j.value("rel_step", o.rel_step);
  o.rank_tol = j.value("rank_tol", o.rank_tol);
  o.n_threads = j.value("n_threads", o.n_threads);
  o.exact_metric_subsample = j.value("exact_metric_subsample", o.exact_metric_subsample);
  return o;
}

ParameterCloud run_sensitivity(const IdentificationProblem& problem,
                               const Eigen::VectorXd& p_star,
                               const LoadingProgram& metric_program,
                               const SensitivityOptions& opts) {
  problem.validate();
  const int n_tests = static_cast<int>(problem.records.size());
  if (opts.sobol.dimensions != n_tests * opts.noise.n_modes) {
    throw ConfigError("sensitivity: sobol dimensions must equal n_tests * n_modes");
  }

  ParameterCloud cloud;
  cloud.p_star = p_star;
  cloud.parameter_names = problem.layout().names();

  const Eigen::VectorXd exp_vec = problem.experimental_vector();
  const Eigen::VectorXd mod_star = model_response(p_star, problem);
  const Eigen::MatrixXd J =
      jacobian_fd(p_star, problem, opts.rel_step, opts.n_threads);
  cloud.correlation = correlation_matrix(J);

  const FastRefit refit(J, p_star, mod_star, exp_vec, opts.rank_tol);
  cloud.gradient_inf_norm = refit.gradient_inf_norm();

  const Eigen::MatrixXd d_eps_dp =
      strain_sensitivity(p_star, metric_program, problem.template_params,
                         opts.metric_sim, opts.rel_step, opts.n_threads);

  std::vector<Eigen::MatrixXd> modes;
  modes.reserve(n_tests);
  for (const auto& rec : problem.records) {
    modes.push_back(noise_mode_matrix(rec, opts.noise.n_modes));
  }

  const Eigen::MatrixXd normals = sobol_normals(opts.sobol);
  const int n_draws = opts.sobol.n_draws;
  cloud.draws.resize(n_draws, p_star.size());
  cloud.deltas.resize(n_draws, p_star.size());
  cloud.distances.resize(n_draws);

  parallel_for(static_cast<std::size_t>(n_draws), opts.n_threads, [&](std::size_t j) {
    Eigen::VectorXd noise(exp_vec.size());
    int offset = 0;
    for (int t = 0; t < n_tests; ++t) {
      const Eigen::VectorXd coeffs =
          opts.noise.sigma *
          normals.row(j).segment(t * opts.noise.n_modes, opts.noise.n_modes).transpose();
      noise.segment(offset, modes[t].rows()) = modes[t] * coeffs;
      offset += static_cast<int>(modes[t].rows());
    }
    const Eigen::VectorXd delta = refit.refit_delta(noise);
    cloud.deltas.row(j) = delta.transpose();
    cloud.draws.row(j) = (p_star + delta).transpose();
    cloud.distances[j] = linearized_distance(d_eps_dp, delta);
  });

  double sum = 0.0;
  for (int j = 0; j < n_draws; ++j) sum += cloud.distances[j];
  cloud.size = sum / n_draws;

  const int audit = std::min(opts.exact_metric_subsample, n_draws);
  for (int j = 0; j < audit; ++j) {
    ExactAuditEntry e;
    e.draw = j;
    e.linearized = cloud.distances[j];
    try {
      e.exact = mechanics_distance(p_star, cloud.draws.row(j).transpose(),
                                   metric_program, problem.template_params,
                                   opts.metric_sim);
    } catch (const std::exception&) {
      // A draw that cannot even be simulated is itself a sensitivity
      // finding; keep the entry with the exact distance marked unknown.
      e.exact = std::numeric_limits<double>::quiet_NaN();
    }
    cloud.exact_audit.push_back(e);
  }
  return cloud;
}

}  // namespace ratchet
