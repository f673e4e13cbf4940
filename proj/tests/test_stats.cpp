#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "covtail/concentration.hpp"
#include "covtail/ensembles.hpp"
#include "covtail/errors.hpp"
#include "covtail/moments.hpp"

using namespace covtail;

TEST_CASE("moment constants validate Jensen bounds") {
  CHECK_THROWS_AS(MomentConstants(0.5, 1.0, 2.0), InputError);
  CHECK_THROWS_AS(MomentConstants(2.0, 0.9, 2.0), InputError);
  CHECK_THROWS_AS(MomentConstants(2.0, 1.0, 1.5), InputError);
  MomentConstants ok(6.0, std::sqrt(3.0), 2.0);
  CHECK(ok.h == 6.0);
}

TEST_CASE("h for independent coordinates") {
  Eigen::VectorXd m2(3), m4(3);
  m2 << 1.0, 1.0, 2.0;
  m4 << 3.0, 100.0, 8.0;  // ratios sqrt: 1.73, 10, 1.41
  CHECK(h_exact_independent(m2, m4) == doctest::Approx(10.0));
  m4 << 3.0, 1.0, 8.0;
  CHECK(h_exact_independent(m2, m4) == doctest::Approx(6.0));  // floor at 6
  // Jensen violation rejected: E X^4 < (E X^2)^2 is impossible
  Eigen::VectorXd bad(1), bad4(1);
  bad << 2.0;
  bad4 << 1.0;
  CHECK_THROWS_AS(h_exact_independent(bad, bad4), InputError);
}

TEST_CASE("empirical h falsifier is close to the exact value for gaussians") {
  EnsembleSpec g = EnsembleSpec::Gaussian(SymMatrix::Identity(3));
  SampleBatch batch = sample_batch(g, 200000, 21);
  double est = h_empirical(batch, population_covariance(g), 100, 22);
  CHECK(est > 1.5);                 // sqrt(3) minus sampling noise
  CHECK(est < std::sqrt(3.0) * 1.2);
}

TEST_CASE("h_star readings") {
  HStarResult r = hstar_scalar(9.0, 1.0);  // the two-point mixer of interest
  CHECK(r.corrected == doctest::Approx(3.0));
  CHECK(r.literal == doctest::Approx(3.0));
  HStarResult r2 = hstar_scalar(12.0, 2.0);
  CHECK(r2.corrected == doctest::Approx(std::sqrt(12.0) / 2.0));
  CHECK(r2.literal == doctest::Approx(std::sqrt(6.0)));
}

TEST_CASE("powertrace falsifier accepts a valid h and flags an invalid one") {
  EnsembleSpec g = EnsembleSpec::Gaussian(SymMatrix::Identity(3));
  PowertraceReport ok = powertrace_check(g, 2.0, std::sqrt(3.0), 50000, 31);
  CHECK_FALSE(ok.violation);
  // h = 1.01 is far too small: E tr(A)^2 = E |X|^4 > (E |X|^2)^2
  PowertraceReport bad = powertrace_check(g, 2.0, 1.01, 50000, 31);
  CHECK(bad.violation);
}

TEST_CASE("gaussian smoothing closed form vs independent trace computation") {
  Rng rng = make_rng(5, 0);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 10; ++rep) {
    const int p = 3;
    Eigen::MatrixXd raw(p, p), rawc(p, p);
    Eigen::VectorXd v(p);
    for (int i = 0; i < p; ++i) {
      v(i) = normal(rng);
      for (int j = 0; j < p; ++j) {
        raw(i, j) = normal(rng);
        rawc(i, j) = normal(rng);
      }
    }
    SymMatrix b(Eigen::MatrixXd(raw + raw.transpose()));
    SymMatrix c(Eigen::MatrixXd(rawc * rawc.transpose()));
    double got = gaussian_smooth_quadratic(b, GaussianMeasure(v, c));
    // independent oracle: elementwise trace sum
    double tr = 0;
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) tr += b(i, j) * c.mat()(j, i);
    CHECK(got == doctest::Approx(v.dot(b.mat() * v) + tr).epsilon(1e-12));
  }
}

TEST_CASE("gaussian KL values") {
  SymMatrix eye = SymMatrix::Identity(2);
  CHECK(gaussian_kl(Eigen::VectorXd::Zero(2), eye) == doctest::Approx(0.0));
  Eigen::VectorXd v(2);
  v << 1.0, 0.0;
  CHECK(gaussian_kl(v, eye) == doctest::Approx(0.5));
  v << 2.0, 0.0;
  CHECK(gaussian_kl(v, eye) == doctest::Approx(2.0));
  // scaling the covariance divides the divergence
  SymMatrix four(Eigen::MatrixXd(4.0 * Eigen::MatrixXd::Identity(2, 2)));
  CHECK(gaussian_kl(v, four) == doctest::Approx(0.5));
  Eigen::VectorXd sing_diag(2);
  sing_diag << 1.0, 0.0;
  CHECK_THROWS_AS(gaussian_kl(v, SymMatrix::Diagonal(sing_diag)), InputError);
}

TEST_CASE("variational inequality on discrete measures") {
  Eigen::VectorXd h(3), mu0(3), mu1(3);
  h << 1.0, -2.0, 0.5;
  mu0 << 0.5, 0.25, 0.25;
  mu1 << 0.2, 0.3, 0.5;
  VariationalResult r = variational_check(h, mu0, mu1);
  CHECK(r.holds);
  CHECK(r.lhs == doctest::Approx(1.0 * 0.2 - 2.0 * 0.3 + 0.5 * 0.5));

  // equality at mu1 = mu0 tilted by e^h
  Eigen::VectorXd tilt = (mu0.array() * h.array().exp()).matrix();
  tilt /= tilt.sum();
  VariationalResult eq = variational_check(h, mu0, tilt);
  CHECK(eq.holds);
  CHECK(eq.lhs == doctest::Approx(eq.rhs).epsilon(1e-12));

  // not absolutely continuous: KL = +inf, still holds
  Eigen::VectorXd mu0z(3), mu1z(3);
  mu0z << 0.5, 0.5, 0.0;
  mu1z << 0.0, 0.5, 0.5;
  CHECK(variational_check(h, mu0z, mu1z).holds);
  CHECK(variational_check(h, mu0z, mu1z).rhs ==
        std::numeric_limits<double>::infinity());

  Eigen::VectorXd not_prob(3);
  not_prob << 0.5, 0.2, 0.2;
  CHECK_THROWS_AS(variational_check(h, not_prob, mu1), InputError);
}

TEST_CASE("nonnegative lower tail bound") {
  FrequencyReport r =
      nonneg_lowertail_check(ScalarDist::Exponential(1.0), 100, 2.0, 20000, 3);
  CHECK(r.trials == 20000);
  CHECK(r.pass);
  CHECK(r.bound == doctest::Approx(std::exp(-2.0)));
  CHECK(r.frequency <= r.bound + 3 * r.se);
  CHECK_THROWS_AS(
      nonneg_lowertail_check(ScalarDist::Gaussian(), 100, 2.0, 100, 3),
      InputError);
}

TEST_CASE("supermartingale crossing bound") {
  FrequencyReport r = supermartingale_tail_check(gaussian_walk(200, 1.0), 0.5,
                                                 2.0, 20000, 17);
  CHECK(r.pass);
  CHECK(r.bound == doctest::Approx(std::exp(-2.0)));
}

TEST_CASE("BDG moment inequality") {
  for (double q : {2.0, 3.0}) {
    BdgReport g = bdg_moment_check(ScalarDist::Gaussian(1.0), q, 50, 20000, 9);
    CHECK(g.holds);
    BdgReport e =
        bdg_moment_check(ScalarDist::Exponential(1.0), q, 50, 20000, 9);
    CHECK(e.holds);
  }
  // no closed-form |W|^q for student t
  CHECK_THROWS_AS(bdg_moment_check(ScalarDist::StudentT(5.0), 3.0, 10, 100, 1),
                  InputError);
}
