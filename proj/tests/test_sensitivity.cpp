// Copyright (c) the ratchet developers. See the top-level LICENSE file.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "ratchet/errors.hpp"
#include "ratchet/sensitivity.hpp"
#include "ratchet/workbench.hpp"
#include "support.hpp"

using namespace ratchet;

namespace {

SimOptions metric_opts() {
  SimOptions o;
  o.ramp_steps = 30;
  return o;
}

// A variant that yields on most cycles of a short test, so short synthetic
// problems carry enough plastic information for a full-rank Jacobian.
MaterialParams soft_af_2() {
  MaterialParams p = ratchet::testing::af_params_2();
  p.yield_stress = 600.0;
  return p;
}

IdentificationProblem two_test_problem(const MaterialParams& p_true, int n_cycles) {
  IdentificationProblem prob;
  prob.template_params = p_true;
  prob.sim_options.ramp_steps = 60;
  prob.sim_options.hold_steps = 8;
  for (auto [sm, sa] : {std::pair{420.0, 470.0}, {635.0, 255.0}}) {
    const LoadingProgram prog = make_experiment_program(
        sm, sa, n_cycles, StageDurations{30, 5, 1, 5}, 0.4);
    prob.add_test(prog, generate_synthetic_experiment(p_true, prog, SynthConfig{},
                                                      prob.sim_options));
  }
  return prob;
}

// Well-conditioned refit fixture with an exactly zero base residual.
struct RefitFixture {
  Eigen::MatrixXd J;
  Eigen::VectorXd p_star, mod, exp;
  RefitFixture(int rows = 120, int cols = 5) {
    testing::Rng rng(97);
    J.resize(rows, cols);
    for (int i = 0; i < J.size(); ++i) J.data()[i] = rng.uniform(-1.0, 1.0);
    p_star.resize(cols);
    for (int i = 0; i < cols; ++i) p_star[i] = rng.uniform(0.5, 2.0);
    mod.resize(rows);
    for (int i = 0; i < rows; ++i) mod[i] = rng.uniform(-1.0, 1.0);
    exp = mod;  // zero-gradient point, exactly
  }
};

}  // namespace

TEST_CASE("sobol points are deterministic and reproduce classic values") {
  SobolSequence seq(3);
  std::vector<double> a(3), b(3);
  seq.point(1, a);
  CHECK(a[0] == 0.5);
  CHECK(a[1] == 0.5);
  seq.point(2, a);
  seq.point(3, b);
  // First dimension is the van der Corput sequence in base 2.
  CHECK((a[0] == 0.75 || a[0] == 0.25));
  CHECK(a[0] + b[0] == 1.0);

  CHECK_THROWS_AS(SobolSequence(41), ConfigError);
  CHECK_THROWS_AS(SobolSequence(0), ConfigError);
}

TEST_CASE("sobol_normals is bitwise deterministic") {
  SobolConfig cfg;
  cfg.n_draws = 500;
  cfg.leap = 300;  // also exercise the leaped path
  const Eigen::MatrixXd a = sobol_normals(cfg);
  const Eigen::MatrixXd b = sobol_normals(cfg);
  CHECK(a.rows() == 500);
  CHECK(a.cols() == 40);
  CHECK((a - b).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("sobol_normals columns match standard normal moments") {
  SobolConfig cfg;  // defaults: 40 dims, skip 1000, contiguous, 10000 draws
  const Eigen::MatrixXd z = sobol_normals(cfg);
  for (int c = 0; c < z.cols(); ++c) {
    const double mean = z.col(c).mean();
    const double var = (z.col(c).array() - mean).square().sum() / (z.rows() - 1);
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);
  }
}

TEST_CASE("antithetic draws are exactly sign-symmetric") {
  SobolConfig cfg;
  cfg.n_draws = 200;
  cfg.antithetic = true;
  const Eigen::MatrixXd z = sobol_normals(cfg);
  const int h = cfg.n_draws / 2;
  for (int j = 0; j < h; ++j) {
    CHECK((z.row(j) + z.row(j + h)).lpNorm<Eigen::Infinity>() == 0.0);
  }
  cfg.n_draws = 201;
  CHECK_THROWS_AS(sobol_normals(cfg), ConfigError);
}

TEST_CASE("sobol_normals rejects odd or oversized dimension counts") {
  SobolConfig cfg;
  cfg.dimensions = 39;
  CHECK_THROWS_AS(sobol_normals(cfg), ConfigError);
  cfg.dimensions = 42;
  CHECK_THROWS_AS(sobol_normals(cfg), ConfigError);
}

TEST_CASE("noise synthesis follows the sine-mode model") {
  MaterialParams p = testing::af_params_2();
  p.yield_stress = 5000.0;
  const LoadingProgram prog =
      make_experiment_program(420.0, 470.0, 6, StageDurations{10, 2, 1, 2});
  const ExperimentRecord rec = generate_synthetic_experiment(
      p, prog, SynthConfig{}, metric_opts());

  // All-zero coefficients produce zero noise.
  std::vector<double> zero(20, 0.0);
  CHECK(synthesize_noise(zero, rec).lpNorm<Eigen::Infinity>() == 0.0);

  // Brute-force oracle over the turning-point times.
  testing::Rng rng(55);
  std::vector<double> coeffs(5);
  for (auto& c : coeffs) c = rng.uniform(-1e-6, 1e-6);
  const Eigen::VectorXd noise = synthesize_noise(coeffs, rec);
  const double T = rec.cyclic_duration();
  for (int c = 0; c < rec.n_cycles(); ++c) {
    for (int half = 0; half < 2; ++half) {
      const double t = half == 0 ? rec.time_of_max(c) : rec.time_of_min(c);
      double ref = 0.0;
      for (std::size_t k = 0; k < coeffs.size(); ++k) {
        ref += coeffs[k] * std::sin((k + 1) * M_PI * t / T);
      }
      CHECK(noise[2 * c + half] == doctest::Approx(ref).epsilon(1e-13));
    }
  }

  // Mode bound: |noise| <= sum_k |sigma_k|.
  double bound = 0.0;
  for (double c : coeffs) bound += std::abs(c);
  CHECK(noise.lpNorm<Eigen::Infinity>() <= bound + 1e-18);
}

TEST_CASE("fast refit: zero noise returns p_star exactly") {
  const RefitFixture fx;
  const FastRefit refit(fx.J, fx.p_star, fx.mod, fx.exp);
  CHECK(refit.gradient_inf_norm() == 0.0);
  const Eigen::VectorXd p = refit.refit(Eigen::VectorXd::Zero(fx.J.rows()));
  CHECK((p - fx.p_star).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("fast refit is exactly linear in the noise") {
  const RefitFixture fx;
  const FastRefit refit(fx.J, fx.p_star, fx.mod, fx.exp);
  testing::Rng rng(61);
  Eigen::VectorXd noise(fx.J.rows());
  for (int i = 0; i < noise.size(); ++i) noise[i] = rng.uniform(-1e-6, 1e-6);
  const Eigen::VectorXd d1 = refit.refit_delta(noise);
  const Eigen::VectorXd d2 = refit.refit_delta(2.0 * noise);
  CHECK((d2 - 2.0 * d1).lpNorm<Eigen::Infinity>() == 0.0);  // doubling is exact

  // Negation symmetry, also exact.
  const Eigen::VectorXd dm = refit.refit_delta(-noise);
  CHECK((dm + d1).lpNorm<Eigen::Infinity>() == 0.0);

  // Reconstructing through p* is exact only to machine precision.
  const Eigen::VectorXd via_p = refit.refit(noise) - fx.p_star;
  CHECK((via_p - d1).lpNorm<Eigen::Infinity>() <=
        1e-14 * fx.p_star.lpNorm<Eigen::Infinity>());
}

TEST_CASE("QR and normal-equations refit paths agree when well conditioned") {
  const RefitFixture fx;
  const FastRefit refit(fx.J, fx.p_star, fx.mod, fx.exp);
  testing::Rng rng(63);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd noise(fx.J.rows());
    for (int i = 0; i < noise.size(); ++i) noise[i] = rng.uniform(-1.0, 1.0);
    const Eigen::VectorXd a = refit.refit(noise);
    const Eigen::VectorXd b = refit.refit_normal_equations(noise);
    CHECK((a - b).norm() <= 1e-8 * (a.norm() + 1.0));
  }
}

TEST_CASE("QR residual is no worse than normal equations near rank deficiency") {
  // Two nearly parallel columns: kappa(J) ~ 1e8.
  testing::Rng rng(67);
  const int rows = 200;
  Eigen::MatrixXd J(rows, 3);
  for (int i = 0; i < rows; ++i) {
    const double base = rng.uniform(-1.0, 1.0);
    J(i, 0) = base;
    J(i, 1) = base * (1.0 + 1e-8 * rng.uniform(-1.0, 1.0));
    J(i, 2) = rng.uniform(-1.0, 1.0);
  }
  Eigen::VectorXd p_star = Eigen::VectorXd::Ones(3);
  Eigen::VectorXd mod = Eigen::VectorXd::Zero(rows);
  const FastRefit refit(J, p_star, mod, mod, 1e-14);
  Eigen::VectorXd noise(rows);
  for (int i = 0; i < rows; ++i) noise[i] = rng.uniform(-1.0, 1.0);
  const double r_qr = (J * (refit.refit(noise) - p_star) - noise).norm();
  const double r_ne = (J * (refit.refit_normal_equations(noise) - p_star) - noise).norm();
  CHECK(r_qr <= r_ne * (1.0 + 1e-9) + 1e-12);
}

TEST_CASE("fast refit flags rank deficiency with the offending column") {
  testing::Rng rng(71);
  Eigen::MatrixXd J(50, 4);
  for (int i = 0; i < J.size(); ++i) J.data()[i] = rng.uniform(-1.0, 1.0);
  J.col(3) = 2.0 * J.col(1);  // exact linear dependence
  const Eigen::VectorXd p = Eigen::VectorXd::Ones(4);
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(50);
  try {
    const FastRefit refit(J, p, z, z);
    FAIL("expected RankDeficientError");
  } catch (const RankDeficientError& e) {
    REQUIRE(!e.columns().empty());
    CHECK(e.columns().front() == 3);
  }
}

TEST_CASE("mechanics distance is a pseudometric on parameters") {
  const MaterialParams tmpl = testing::af_params_2();
  const ParameterLayout layout = ParameterLayout::for_params(tmpl);
  const Eigen::VectorXd p = layout.from_params(tmpl);
  const LoadingProgram metric = default_metric_program();

  CHECK(mechanics_distance(p, p, metric, tmpl, metric_opts()) == 0.0);

  Eigen::VectorXd q = p;
  q[0] *= 1.05;
  q[4] *= 0.95;
  const double ab = mechanics_distance(p, q, metric, tmpl, metric_opts());
  const double ba = mechanics_distance(q, p, metric, tmpl, metric_opts());
  CHECK(ab == ba);
  CHECK(ab > 0.0);
}

TEST_CASE("strain sensitivity vanishes for an elastic program") {
  const MaterialParams tmpl = testing::af_params_2();
  const ParameterLayout layout = ParameterLayout::for_params(tmpl);
  const Eigen::VectorXd p = layout.from_params(tmpl);
  // Peaks far below yield: no plastic flow anywhere, so no free parameter
  // (hardening, branch stiffness, saturation, K) influences the strain.
  const LoadingProgram elastic = make_metric_program(6, 400.0, 1.0);
  const Eigen::MatrixXd D = strain_sensitivity(p, elastic, tmpl, metric_opts());
  CHECK(D.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("strain sensitivity matches directional differences") {
  const MaterialParams tmpl = testing::af_params_2();
  const ParameterLayout layout = ParameterLayout::for_params(tmpl);
  const Eigen::VectorXd p = layout.from_params(tmpl);
  const LoadingProgram metric = default_metric_program();
  const Eigen::MatrixXd D = strain_sensitivity(p, metric, tmpl, metric_opts());
  CHECK(D.lpNorm<Eigen::Infinity>() > 0.0);

  testing::Rng rng(73);
  Eigen::VectorXd d(p.size());
  for (int i = 0; i < d.size(); ++i) d[i] = rng.uniform(-1.0, 1.0) * std::abs(p[i]);
  const double eps = 1e-5;
  auto series = [&](const Eigen::VectorXd& pp) {
    const MaterialParams mp = layout.to_params(pp, tmpl);
    const SimulationTrace t = integrate(mp, metric, metric_opts());
    return Eigen::Map<const Eigen::VectorXd>(t.eps11.data(), t.eps11.size()).eval();
  };
  const Eigen::VectorXd dir = (series(p + eps * d) - series(p - eps * d)) / (2 * eps);
  const Eigen::VectorXd jd = D * d;
  CHECK((dir - jd).lpNorm<Eigen::Infinity>() <=
        1e-5 * jd.lpNorm<Eigen::Infinity>() + 1e-12);
}

TEST_CASE("linearized distance: homogeneity and brute-force scan") {
  testing::Rng rng(79);
  Eigen::MatrixXd D(40, 6);
  for (int i = 0; i < D.size(); ++i) D.data()[i] = rng.uniform(-2.0, 2.0);
  Eigen::VectorXd dp(6);
  for (int i = 0; i < 6; ++i) dp[i] = rng.uniform(-1.0, 1.0);

  CHECK(linearized_distance(D, Eigen::VectorXd::Zero(6)) == 0.0);
  CHECK(linearized_distance(D, 3.0 * dp) ==
        doctest::Approx(3.0 * linearized_distance(D, dp)).epsilon(1e-14));

  double brute = 0.0;
  for (int t = 0; t < D.rows(); ++t) brute = std::max(brute, std::abs(D.row(t).dot(dp)));
  CHECK(linearized_distance(D, dp) == doctest::Approx(brute).epsilon(1e-15));
}

TEST_CASE("cloud size basics") {
  testing::Rng rng(83);
  Eigen::MatrixXd D(10, 3);
  for (int i = 0; i < D.size(); ++i) D.data()[i] = rng.uniform(-1.0, 1.0);
  const Eigen::VectorXd p = Eigen::VectorXd::Ones(3);
  Eigen::MatrixXd draws(5, 3);
  draws.rowwise() = p.transpose();
  CHECK(cloud_size(p, draws, D) == 0.0);

  for (int i = 0; i < draws.size(); ++i) draws.data()[i] += rng.uniform(-0.1, 0.1);
  const double base = cloud_size(p, draws, D);
  CHECK(base > 0.0);
  // Doubling every offset doubles the mean distance.
  Eigen::MatrixXd doubled = draws;
  for (int j = 0; j < draws.rows(); ++j) {
    doubled.row(j) = p.transpose() + 2.0 * (draws.row(j) - p.transpose());
  }
  CHECK(cloud_size(p, doubled, D) == doctest::Approx(2.0 * base).epsilon(1e-14));
}

TEST_CASE("correlation matrix properties and oracle") {
  // Orthogonal columns give the identity.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(6, 3);
  J(0, 0) = 2.0;
  J(1, 1) = -1.5;
  J(2, 2) = 0.5;
  const Eigen::MatrixXd corr = correlation_matrix(J);
  CHECK((corr - Eigen::MatrixXd::Identity(3, 3)).lpNorm<Eigen::Infinity>() <= 1e-14);

  // A duplicated column correlates exactly.
  testing::Rng rng(89);
  Eigen::MatrixXd J2(100, 5);
  for (int i = 0; i < J2.size(); ++i) J2.data()[i] = rng.uniform(-1.0, 1.0);
  J2.col(4) = 0.7 * J2.col(1);
  const Eigen::MatrixXd corr2 = correlation_matrix(J2);
  CHECK(corr2(1, 4) == doctest::Approx(1.0).epsilon(1e-12));

  // Brute-force normalization oracle.
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      double pij = 0.0, pii = 0.0, pjj = 0.0;
      for (int r = 0; r < 100; ++r) {
        pij += J2(r, i) * J2(r, j);
        pii += J2(r, i) * J2(r, i);
        pjj += J2(r, j) * J2(r, j);
      }
      CHECK(corr2(i, j) == doctest::Approx(pij / std::sqrt(pii * pjj)).epsilon(1e-12));
    }
  }
  CHECK(corr2.diagonal().isApproxToConstant(1.0, 1e-14));

  // Column scaling by a positive constant preserves the matrix.
  Eigen::MatrixXd J3 = J2;
  J3.col(2) *= 4.0;
  CHECK((correlation_matrix(J3) - corr2).lpNorm<Eigen::Infinity>() <= 1e-13);

  // Zero column is reported by index.
  J2.col(3).setZero();
  try {
    correlation_matrix(J2);
    FAIL("expected RankDeficientError");
  } catch (const RankDeficientError& e) {
    CHECK(e.columns().front() == 3);
  }
}

TEST_CASE("run_sensitivity: zero noise collapses the cloud onto p_star") {
  const MaterialParams p_true = soft_af_2();
  const IdentificationProblem prob = two_test_problem(p_true, 8);
  const Eigen::VectorXd p = prob.layout().from_params(p_true);

  SensitivityOptions opts;
  opts.noise.sigma = 0.0;
  opts.sobol.n_draws = 32;
  opts.metric_sim = metric_opts();
  const ParameterCloud cloud =
      run_sensitivity(prob, p, default_metric_program(), opts);
  CHECK(cloud.size == 0.0);
  for (int j = 0; j < cloud.draws.rows(); ++j) {
    CHECK((cloud.draws.row(j).transpose() - p).lpNorm<Eigen::Infinity>() == 0.0);
  }
  CHECK(cloud.correlation.rows() == p.size());
  CHECK(cloud.gradient_inf_norm <= 1e-20);
}

TEST_CASE("run_sensitivity: doubling sigma doubles the cloud exactly") {
  const MaterialParams p_true = soft_af_2();
  const IdentificationProblem prob = two_test_problem(p_true, 8);
  const Eigen::VectorXd p = prob.layout().from_params(p_true);

  SensitivityOptions opts;
  opts.noise.sigma = 1e-6;
  opts.sobol.n_draws = 64;
  opts.metric_sim = metric_opts();
  const ParameterCloud c1 = run_sensitivity(prob, p, default_metric_program(), opts);
  opts.noise.sigma = 2e-6;
  const ParameterCloud c2 = run_sensitivity(prob, p, default_metric_program(), opts);
  CHECK(c1.size > 0.0);
  CHECK(c2.size == 2.0 * c1.size);  // bitwise, scaling by two is exact
}

TEST_CASE("run_sensitivity is bitwise identical across thread counts") {
  const MaterialParams p_true = soft_af_2();
  const IdentificationProblem prob = two_test_problem(p_true, 8);
  const Eigen::VectorXd p = prob.layout().from_params(p_true);

  SensitivityOptions opts;
  opts.sobol.n_draws = 48;
  opts.metric_sim = metric_opts();
  opts.n_threads = 1;
  const ParameterCloud a = run_sensitivity(prob, p, default_metric_program(), opts);
  opts.n_threads = 4;
  const ParameterCloud b = run_sensitivity(prob, p, default_metric_program(), opts);
  CHECK((a.draws - b.draws).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((a.distances - b.distances).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(a.size == b.size);
}

TEST_CASE("antithetic noise keeps the cloud centered on p_star") {
  const MaterialParams p_true = soft_af_2();
  const IdentificationProblem prob = two_test_problem(p_true, 8);
  const Eigen::VectorXd p = prob.layout().from_params(p_true);

  SensitivityOptions opts;
  opts.sobol.n_draws = 32;
  opts.sobol.antithetic = true;
  opts.metric_sim = metric_opts();
  const ParameterCloud cloud = run_sensitivity(prob, p, default_metric_program(), opts);
  const int h = opts.sobol.n_draws / 2;
  Eigen::VectorXd center = Eigen::VectorXd::Zero(p.size());
  for (int j = 0; j < h; ++j) {
    const Eigen::VectorXd da = cloud.deltas.row(j).transpose();
    const Eigen::VectorXd db = cloud.deltas.row(j + h).transpose();
    CHECK((da + db).lpNorm<Eigen::Infinity>() == 0.0);  // exact mirror pair
    center += da + db;
    CHECK(cloud.distances[j] == cloud.distances[j + h]);
  }
  CHECK(center.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("run_sensitivity validates the dimension wiring") {
  const MaterialParams p_true = soft_af_2();
  const IdentificationProblem prob = two_test_problem(p_true, 8);
  const Eigen::VectorXd p = prob.layout().from_params(p_true);
  SensitivityOptions opts;
  opts.sobol.dimensions = 20;  // 2 tests x 20 modes needs 40
  CHECK_THROWS_AS(run_sensitivity(prob, p, default_metric_program(), opts),
                  ConfigError);
}

TEST_CASE("exact metric audit stays close to the linearization") {
  const MaterialParams p_true = soft_af_2();
  const IdentificationProblem prob = two_test_problem(p_true, 12);
  const Eigen::VectorXd p = prob.layout().from_params(p_true);

  SensitivityOptions opts;
  opts.noise.sigma = 1e-8;  // keep refits well inside the linear regime
  opts.sobol.n_draws = 16;
  opts.exact_metric_subsample = 4;
  opts.metric_sim = metric_opts();
  const ParameterCloud cloud = run_sensitivity(prob, p, default_metric_program(), opts);
  REQUIRE(cloud.exact_audit.size() == 4);
  for (const auto& e : cloud.exact_audit) {
    REQUIRE(std::isfinite(e.exact));
    if (e.linearized > 1e-10) {
      CHECK(std::abs(e.exact - e.linearized) <= 0.10 * e.linearized);
    }
  }
}
