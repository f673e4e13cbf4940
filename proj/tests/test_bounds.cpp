#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "covtail/ensembles.hpp"
#include "covtail/errors.hpp"
#include "covtail/lowertail.hpp"
#include "covtail/ols.hpp"

using namespace covtail;

TEST_CASE("theorem bound arithmetic") {
  // frozen: 1 - 7*6*sqrt((4 + 2 ln 20)/50000)
  LowerTailBoundParams params(4, 50000, 0.1, 6.0);
  BoundValue b = theorem_main_bound(params);
  CHECK(b.value == doctest::Approx(0.40628384793575845).epsilon(1e-12));
  CHECK_FALSE(b.vacuous);
  CHECK(params.t() == doctest::Approx(std::log(20.0)));

  // small n makes the bound vacuous
  BoundValue v = theorem_main_bound(LowerTailBoundParams(4, 100, 0.1, 6.0));
  CHECK(v.vacuous);

  CHECK_THROWS_AS(LowerTailBoundParams(0, 10, 0.1, 6.0), InputError);
  CHECK_THROWS_AS(LowerTailBoundParams(4, 10, 1.5, 6.0), InputError);
  CHECK_THROWS_AS(LowerTailBoundParams(4, 10, 0.1, 0.5), InputError);
}

TEST_CASE("empirical covariance") {
  Eigen::MatrixXd x(2, 2);
  x << 1.0, 2.0, 3.0, 4.0;
  SymMatrix s = empirical_covariance({x, std::nullopt});
  CHECK(s(0, 0) == doctest::Approx((1.0 + 9.0) / 2));
  CHECK(s(0, 1) == doctest::Approx((2.0 + 12.0) / 2));
  CHECK(s(1, 1) == doctest::Approx((4.0 + 16.0) / 2));
}

TEST_CASE("relative lower eigenvalue") {
  // identity population: reduces to lambda_min of sigma_hat
  Eigen::VectorXd d(3);
  d << 0.5, 2.0, 1.0;
  CHECK(relative_lower_eigenvalue(SymMatrix::Diagonal(d),
                                  SymMatrix::Identity(3)) ==
        doctest::Approx(0.5));

  // whitening: sigma_hat = c * sigma gives exactly c
  Eigen::MatrixXd c(2, 2);
  c << 2.0, 0.5, 0.5, 1.0;
  SymMatrix sigma(c);
  CHECK(relative_lower_eigenvalue(SymMatrix(Eigen::MatrixXd(0.7 * c)), sigma) ==
        doctest::Approx(0.7));

  // independent oracle: the reported value is the largest feasible ratio,
  // so random directions can never fall below it
  Rng rng = make_rng(77, 0);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd raw(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) raw(i, j) = normal(rng);
  SymMatrix hat(Eigen::MatrixXd(raw * raw.transpose()));
  Eigen::MatrixXd raw2(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) raw2(i, j) = normal(rng);
  SymMatrix pop(Eigen::MatrixXd(raw2 * raw2.transpose() +
                                Eigen::MatrixXd::Identity(3, 3)));
  double rel = relative_lower_eigenvalue(hat, pop);
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_v = Eigen::VectorXd::Unit(3, 0);
  for (int k = 0; k < 20000; ++k) {
    Eigen::VectorXd v(3);
    for (int j = 0; j < 3; ++j) v(j) = normal(rng);
    double ratio = hat.quad(v) / pop.quad(v);
    if (ratio < best) {
      best = ratio;
      best_v = v / v.norm();
    }
  }
  // refine by shrinking-scale random descent so the oracle reaches the
  // true minimizing direction even when it is poorly aligned with samples
  for (double scale = 0.5; scale > 1e-9; scale *= 0.5) {
    for (int it = 0; it < 2000; ++it) {
      Eigen::VectorXd v = best_v;
      for (int j = 0; j < 3; ++j) v(j) += scale * normal(rng);
      double ratio = hat.quad(v) / pop.quad(v);
      if (ratio < best) {
        best = ratio;
        best_v = v / v.norm();
      }
    }
  }
  CHECK(rel <= best + 1e-10);
  CHECK(rel >= best - 0.01 * std::abs(best) - 1e-10);

  // rank-deficient population with mass outside its range is rejected
  Eigen::VectorXd rank1(2);
  rank1 << 1.0, 0.0;
  CHECK_THROWS_AS(relative_lower_eigenvalue(SymMatrix::Identity(2),
                                            SymMatrix::Diagonal(rank1)),
                  InputError);
  // and accepted when sigma_hat lives in the range
  CHECK(relative_lower_eigenvalue(SymMatrix::Diagonal(rank1),
                                  SymMatrix::Diagonal(rank1)) ==
        doctest::Approx(1.0));
}

TEST_CASE("trace truncation") {
  Eigen::VectorXd d(2);
  d << 3.0, 1.0;  // trace 4
  SymMatrix b = SymMatrix::Diagonal(d);
  SymMatrix t = truncate_psd(b, 2.0);
  CHECK(t.trace() == doctest::Approx(2.0));
  CHECK(t(0, 0) == doctest::Approx(1.5));
  // R above the trace leaves the matrix unchanged
  SymMatrix u = truncate_psd(b, 10.0);
  CHECK((u.mat() - b.mat()).cwiseAbs().maxCoeff() == 0.0);
  // zero matrix maps to zero
  SymMatrix z = truncate_psd(SymMatrix::Zero(2), 1.0);
  CHECK(z.mat().cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(truncate_psd(b, 0.0), InputError);
}

TEST_CASE("lowertail experiment smoke run") {
  EnsembleSpec g = EnsembleSpec::Gaussian(SymMatrix::Identity(3));
  LowerTailExperimentConfig config;
  config.n = 4000;
  config.delta = 0.1;
  config.h = std::sqrt(3.0);
  config.trials = 40;
  config.seed = 5;
  config.truncation_draws = 5000;
  TrialReport r = lowertail_experiment(g, population_covariance(g), config);
  CHECK(r.trials == 40);
  CHECK_FALSE(r.vacuous);
  CHECK(r.pass);
  CHECK(r.extra.contains("truncation"));
  CHECK(r.extra["truncation"]["pointwise_violations"].get<int>() == 0);
}

TEST_CASE("ols constants") {
  CHECK(c_eta(1.0) == doctest::Approx(5.25));
  CHECK(c_eta(0.5) == doctest::Approx(6.875));
  CHECK(d_q_eta(1.0, 2.0) == doctest::Approx(36.0));
  CHECK(d_q_eta(0.5, 3.0) == doctest::Approx(225.0));  // ((2.5)*3/0.5)^2
  CHECK_THROWS_AS(c_eta(0.0), InputError);
}

TEST_CASE("ols bound arithmetic") {
  // frozen: (2*10 + 5.25 ln 30)/(0.81 * 1000)
  OlsBoundParams params(1.0, 0.1, 0.1, 2.0, SymMatrix::Identity(10), 6.0,
                        std::sqrt(3.0), 1000);
  CHECK(ols_bound(params) ==
        doctest::Approx((20.0 + 5.25 * std::log(30.0)) / 810.0).epsilon(1e-12));
  CHECK(ols_bound(params) == doctest::Approx(0.04673615).epsilon(1e-5));
  CHECK_THROWS_AS(
      OlsBoundParams(0.0, 0.1, 0.1, 2.0, SymMatrix::Identity(2), 6, 1, 10),
      InputError);
}

TEST_CASE("ols sample condition") {
  SampleCondition c = ols_sample_condition(10, 0.1, 0.3, 1.0, 2.0, 6.0, 1.0);
  // term1 frozen: 49*36*(10 + 2 ln 60)/0.09
  double dims = 10.0 + 2.0 * std::log(60.0);
  CHECK(c.term1 == doctest::Approx(49.0 * 36.0 * dims / 0.09).epsilon(1e-12));
  CHECK(c.term1 == doctest::Approx(356498.3).epsilon(1e-4));
  CHECK(c.term1_literal ==
        doctest::Approx(49.0 * dims / (36.0 * 0.09)).epsilon(1e-12));
  // term2: 6 * 9 * 4 * 2 / (0.1 * 1) at q=2
  CHECK(c.term2 == doctest::Approx(6.0 * 9.0 * 4.0 * 2.0 / 0.1).epsilon(1e-12));
  CHECK(c.n_min == static_cast<long>(std::ceil(std::max(c.term1, c.term2))));
}

TEST_CASE("ols fit and excess loss") {
  // noiseless well-conditioned data recovers beta exactly
  EnsembleSpec g = EnsembleSpec::Gaussian(SymMatrix::Identity(3));
  Eigen::VectorXd beta(3);
  beta << 1.0, -2.0, 0.5;
  SampleBatch batch = sample_linear_model({g, beta, 0.0}, 500, 3);
  Eigen::VectorXd fit = ols_fit(batch);
  CHECK((fit - beta).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(excess_loss(fit, beta, population_covariance(g)) < 1e-18);

  Eigen::VectorXd other(3);
  other << 2.0, -2.0, 0.5;
  CHECK(excess_loss(other, beta, SymMatrix::Identity(3)) ==
        doctest::Approx(1.0));

  CHECK_THROWS_AS(ols_fit(sample_batch(g, 10, 1)), InputError);
}

TEST_CASE("vector sum experiment at small scale") {
  EnsembleSpec g = EnsembleSpec::Gaussian(SymMatrix::Identity(4));
  VectorSumConfig config;
  config.n = 500;
  config.trials = 2000;
  config.h_star = 1.0;
  config.seed = 8;
  TrialReport r =
      vector_sum_experiment(g, population_covariance(g), config);
  CHECK(r.pass);
  CHECK(r.extra["claim_sum_sq"]["ok"].get<bool>());
  CHECK(r.extra["claim_quad_variation"]["ok"].get<bool>());

  // a declared Lambda far below the sampled moments must be rejected
  SymMatrix tiny(Eigen::MatrixXd(0.25 * Eigen::MatrixXd::Identity(4, 4)));
  CHECK_THROWS_AS(vector_sum_experiment(g, tiny, config), NumericError);
}

TEST_CASE("ols experiment coverage at small scale") {
  EnsembleSpec g = EnsembleSpec::Gaussian(SymMatrix::Identity(4));
  Eigen::VectorXd beta = Eigen::VectorXd::Ones(4);
  OlsBoundParams params(1.0, 0.1, 0.1, 2.0, SymMatrix::Identity(4),
                        std::sqrt(3.0), std::sqrt(3.0), 800);
  OlsExperimentConfig config{params, 100, 12, 0};
  TrialReport r = ols_experiment({g, beta, 1.0}, config);
  CHECK(r.pass);
  double mean_excess = r.extra["mean_excess"].get<double>();
  // sigma^2 p / n benchmark
  CHECK(mean_excess > 0.5 * 4.0 / 800);
  CHECK(mean_excess < 2.0 * 4.0 / 800);
}
