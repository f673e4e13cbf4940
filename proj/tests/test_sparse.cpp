#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "covtail/ensembles.hpp"
#include "covtail/errors.hpp"
#include "covtail/lasso.hpp"
#include "covtail/ols.hpp"
#include "covtail/sparse_re.hpp"

using namespace covtail;

namespace {

// random-search oracle, independent of the gradient optimizer: many cone
// probes plus a shrinking random-perturbation descent from the best ones
double brute_force_re(const SymMatrix& a, const ConeSpec& cone, int probes,
                      std::uint64_t seed) {
  const int p = a.dim();
  Rng rng = make_rng(seed, 0);
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_v;
  for (int k = 0; k < probes; ++k) {
    Eigen::VectorXd v = random_cone_point(cone, p, rng);
    double q = a.quad(v);
    if (q < best) {
      best = q;
      best_v = v;
    }
  }
  // local polish: accept-if-lower random steps with decaying scale
  std::normal_distribution<double> normal;
  std::vector<char> on(p, 0);
  for (int j : cone.support) on[j] = 1;
  for (double scale = 0.3; scale > 1e-7; scale *= 0.5) {
    for (int it = 0; it < 3000; ++it) {
      Eigen::VectorXd v = best_v;
      for (int j = 0; j < p; ++j) v(j) += scale * normal(rng);
      // renormalize the support block, clip the off-support mass
      double s2 = 0, s1 = 0;
      for (int j : cone.support) s2 += v(j) * v(j);
      if (s2 < 1e-12) continue;
      double norm = std::sqrt(s2);
      for (int j = 0; j < p; ++j) v(j) /= norm;
      for (int j : cone.support) s1 += std::abs(v(j));
      double off = 0;
      for (int j = 0; j < p; ++j)
        if (!on[j]) off += std::abs(v(j));
      if (off > cone.alpha * s1) {
        double shrink = cone.alpha * s1 / off;
        for (int j = 0; j < p; ++j)
          if (!on[j]) v(j) *= shrink;
      }
      double q = a.quad(v);
      if (q < best) {
        best = q;
        best_v = v;
      }
    }
  }
  return std::sqrt(std::max(0.0, best));
}

SymMatrix random_psd(int p, Rng& rng, double ridge = 0.05) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd raw(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) raw(i, j) = normal(rng);
  return SymMatrix(Eigen::MatrixXd(raw * raw.transpose() / p +
                                   ridge * Eigen::MatrixXd::Identity(p, p)));
}

}  // namespace

TEST_CASE("cone membership") {
  ConeSpec s0({0}, 1.0, 2);
  Eigen::VectorXd v(2);
  v << 1.0, 0.0;
  CHECK(cone_membership(v, s0));  // supported on S
  v << 1.0, 2.0;
  CHECK_FALSE(cone_membership(v, s0));  // 2 > 1
  ConeSpec s3({0}, 3.0, 2);
  v << 1.0, -3.0;
  CHECK(cone_membership(v, s3));  // boundary
  CHECK_THROWS_AS(ConeSpec({}, 1.0, 2), InputError);
  CHECK_THROWS_AS(ConeSpec({0, 0}, 1.0, 2), InputError);
  CHECK_THROWS_AS(ConeSpec({2}, 1.0, 2), InputError);
  CHECK(s0.alpha_tilde(0.0) == doctest::Approx(1.0));
  CHECK(ConeSpec({0}, 3.0, 2).alpha_tilde(0.1) ==
        doctest::Approx(3.0 * std::sqrt(1.1 / 0.9)));
}

TEST_CASE("restricted eigenvalue closed forms") {
  // identity: off-support mass only increases the form
  REResult id3 = restricted_eigenvalue(SymMatrix::Identity(3),
                                       ConeSpec({0, 1}, 3.0, 3));
  CHECK(id3.value == doctest::Approx(1.0).epsilon(1e-6));

  // scaling law
  SymMatrix four(Eigen::MatrixXd(4.0 * Eigen::MatrixXd::Identity(3, 3)));
  REResult sc = restricted_eigenvalue(four, ConeSpec({0, 1}, 3.0, 3));
  CHECK(sc.value == doctest::Approx(2.0).epsilon(1e-6));

  // correlation 0.6: re = sqrt(1 - 0.36) = 0.8
  Eigen::MatrixXd c(2, 2);
  c << 1.0, 0.6, 0.6, 1.0;
  REResult corr = restricted_eigenvalue(SymMatrix(c), ConeSpec({0}, 1.0, 2));
  CHECK(corr.value == doctest::Approx(0.8).epsilon(1e-6));
  CHECK(cone_membership(corr.minimizer, ConeSpec({0}, 1.0, 2)));

  // diagonal: sqrt of the minimum support diagonal
  Eigen::VectorXd d(3);
  d << 4.0, 9.0, 0.25;
  REResult diag = restricted_eigenvalue(SymMatrix::Diagonal(d),
                                        ConeSpec({0, 1}, 2.0, 3));
  CHECK(diag.value == doctest::Approx(2.0).epsilon(1e-6));

  // certificate invariant: value^2 |v_S|^2 <= v^T A v + tol
  double vs2 = 0;
  for (int j : {0}) vs2 += corr.minimizer(j) * corr.minimizer(j);
  CHECK(corr.value * corr.value * vs2 <=
        SymMatrix(c).quad(corr.minimizer) + 1e-8);
}

TEST_CASE("restricted eigenvalue properties") {
  Rng rng = make_rng(123, 0);
  SymMatrix a = random_psd(4, rng);
  ConeSpec cone({0, 2}, 2.0, 4);
  REResult base = restricted_eigenvalue(a, cone, 32, 1);

  // scaling re(cA) = sqrt(c) re(A)
  for (double cmul : {0.25, 4.0}) {
    SymMatrix scaled(Eigen::MatrixXd(cmul * a.mat()));
    REResult r = restricted_eigenvalue(scaled, cone, 32, 1);
    CHECK(r.value == doctest::Approx(std::sqrt(cmul) * base.value)
                         .epsilon(1e-6));
  }

  // monotone in alpha: larger cone, smaller minimum
  REResult narrow = restricted_eigenvalue(a, ConeSpec({0, 2}, 1.0, 4), 32, 1);
  REResult wide = restricted_eigenvalue(a, ConeSpec({0, 2}, 3.0, 4), 32, 1);
  CHECK(narrow.value >= wide.value - 1e-6);

  // lower bracket is honest
  CHECK(base.certificate_gap >= -1e-12);
}

TEST_CASE("optimizer matches the brute-force oracle") {
  Rng rng = make_rng(9, 0);
  for (int inst = 0; inst < 10; ++inst) {
    const int p = 3 + inst % 4;  // up to 6
    SymMatrix a = random_psd(p, rng);
    std::vector<int> support = {0};
    if (inst % 2 && p > 2) support.push_back(2);
    double alpha = inst % 3 ? 3.0 : 1.0;
    ConeSpec cone(support, alpha, p);
    REResult opt = restricted_eigenvalue(a, cone, 32, inst);
    double oracle = brute_force_re(a, cone, 200000, inst + 1000);
    CHECK(opt.value ==
          doctest::Approx(oracle).epsilon(1e-3));
  }
}

TEST_CASE("restricted eigenvalue over all supports") {
  Eigen::VectorXd d(3);
  d << 4.0, 9.0, 0.25;
  auto [r, support] =
      restricted_eigenvalue_all(SymMatrix::Diagonal(d), 1, 2.0, 16, 3);
  CHECK(r.value == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(support == std::vector<int>{2});

  auto [rid, sid] = restricted_eigenvalue_all(SymMatrix::Identity(4), 2, 3.0,
                                              16, 3);
  CHECK(rid.value == doctest::Approx(1.0).epsilon(1e-6));

  // permutation invariance
  Rng rng = make_rng(55, 0);
  SymMatrix a = random_psd(4, rng);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(4);
  perm.setIdentity();
  std::shuffle(perm.indices().data(), perm.indices().data() + 4, rng);
  SymMatrix permuted(Eigen::MatrixXd(perm * a.mat() * perm.transpose()));
  auto [ra, sa] = restricted_eigenvalue_all(a, 2, 2.0, 32, 5);
  auto [rp, sp] = restricted_eigenvalue_all(permuted, 2, 2.0, 32, 5);
  CHECK(ra.value == doctest::Approx(rp.value).epsilon(1e-6));

  CHECK_THROWS_AS(restricted_eigenvalue_all(SymMatrix::Identity(3), 4, 1.0),
                  InputError);
}

TEST_CASE("transfer principle") {
  Rng rng = make_rng(31, 0);
  SymMatrix sigma = random_psd(5, rng);

  // Sigma_hat = Sigma, eta = 0, D = 0: equality margin, no violations
  TransferReport eq = transfer_check(sigma, sigma, 0.0, 3,
                                     Eigen::VectorXd::Zero(5), 2000, 1);
  CHECK(eq.premise_exhaustive);
  CHECK(eq.premise_holds);
  CHECK(eq.violations == 0);
  CHECK(eq.min_margin >= -1e-10);
  CHECK(eq.ok);

  // Sigma_hat = (1 - eta) Sigma exactly: premise tight, conclusion holds
  double eta = 0.3;
  SymMatrix shrunk(Eigen::MatrixXd((1.0 - eta) * sigma.mat()));
  TransferReport tight = transfer_check(shrunk, sigma, eta, 3,
                                        Eigen::VectorXd::Zero(5), 2000, 2);
  CHECK(tight.premise_holds);
  CHECK(std::abs(tight.premise_margin) < 1e-10);
  CHECK(tight.ok);

  // D below its lower-bound condition is a precondition error
  SymMatrix bigger(
      Eigen::MatrixXd(sigma.mat() + Eigen::MatrixXd::Identity(5, 5)));
  CHECK_THROWS_AS(transfer_check(bigger, sigma, 0.0, 3,
                                 Eigen::VectorXd::Zero(5), 100, 3),
                  InputError);
  CHECK_THROWS_AS(transfer_check(sigma, sigma, 0.0, 1,
                                 Eigen::VectorXd::Zero(5), 100, 3),
                  InputError);
}

TEST_CASE("normalize design") {
  Eigen::MatrixXd m(2, 2);
  m << 4.0, 2.0, 2.0, 1.0;
  NormalizedDesign nd = normalize_design(SymMatrix(m));
  CHECK(nd.normalized(0, 0) == 1.0);
  CHECK(nd.normalized(1, 1) == 1.0);
  CHECK(nd.normalized(0, 1) == doctest::Approx(1.0));

  Eigen::VectorXd d(2);
  d << 0.0, 1.0;
  NormalizedDesign z = normalize_design(SymMatrix::Diagonal(d));
  CHECK(z.normalized(0, 0) == 0.0);
  CHECK(z.normalized(1, 1) == 1.0);

  // already unit-diagonal: unchanged
  Eigen::MatrixXd c(2, 2);
  c << 1.0, 0.3, 0.3, 1.0;
  NormalizedDesign u = normalize_design(SymMatrix(c));
  CHECK((u.normalized.mat() - c).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("rudelson check on constructed instances") {
  Rng rng = make_rng(71, 0);
  SymMatrix sigma = random_psd(5, rng);
  ConeSpec cone({0, 1}, 2.0, 5);

  // Sigma_hat = Sigma with gamma = 0.1: hypotheses hold trivially
  RudelsonReport same = rudelson_check(sigma, sigma, cone, 0.2, 0.1, 500, 1);
  CHECK(same.precondition_met);
  CHECK(same.ok);
  CHECK(same.min_margin >= 0.0);

  // Sigma_hat = (1 - eps) Sigma: sparse hypothesis tight, re factor exact
  double eps = 0.2;
  SymMatrix shrunk(Eigen::MatrixXd((1.0 - eps) * sigma.mat()));
  RudelsonReport tight = rudelson_check(shrunk, sigma, cone, eps, 0.1, 500, 2);
  CHECK(tight.precondition_met);
  CHECK(tight.re_empirical ==
        doctest::Approx(std::sqrt(1.0 - eps) * tight.re_population)
            .epsilon(1e-4));
  CHECK(tight.ok);

  // a violated diagonal hypothesis is a report, not an exception
  SymMatrix inflated(Eigen::MatrixXd(2.0 * sigma.mat()));
  RudelsonReport bad = rudelson_check(inflated, sigma, cone, 0.2, 0.1, 100, 3);
  CHECK_FALSE(bad.precondition_met);
  CHECK_FALSE(bad.ok);

  CHECK_THROWS_AS(rudelson_check(sigma, sigma, cone, 0.7, 0.1, 10, 1),
                  InputError);
}

TEST_CASE("lasso fit") {
  // scalar case: n = p = 1, x = 1, y = 1 gives beta = 1 - lambda/2
  Eigen::MatrixXd x(1, 1);
  x << 1.0;
  Eigen::VectorXd y(1);
  y << 1.0;
  SampleBatch b{x, y};
  CHECK(lasso_fit(b, 0.5)(0) == doctest::Approx(0.75));
  CHECK(lasso_fit(b, 1.9)(0) == doctest::Approx(0.05));

  // lambda above the threshold kills every coordinate
  EnsembleSpec g = EnsembleSpec::Gaussian(SymMatrix::Identity(3));
  Eigen::VectorXd beta(3);
  beta << 1.0, 0.0, -0.5;
  SampleBatch batch = sample_linear_model({g, beta, 0.1}, 200, 7);
  Eigen::VectorXd c =
      batch.vectors.transpose() * (*batch.responses) / batch.n();
  double threshold = 2.0 * c.cwiseAbs().maxCoeff();
  CHECK(lasso_fit(batch, threshold * 1.0001).cwiseAbs().maxCoeff() == 0.0);

  // lambda = 0 on a full-rank design agrees with least squares
  Eigen::VectorXd ls = ols_fit(batch);
  CHECK((lasso_fit(batch, 0.0, 1e-10) - ls).cwiseAbs().maxCoeff() < 1e-6);

  CHECK_THROWS_AS(lasso_fit(batch, -1.0), InputError);
}

TEST_CASE("theorem re experiment at desk scale") {
  EnsembleSpec fw = EnsembleSpec::FourwiseRademacher(16);
  SymMatrix sigma = population_covariance(fw);
  ConeSpec cone({0, 1}, 3.0, 16);
  TheoremReConfig config;
  config.eps = 0.4;
  config.delta = 0.1;
  config.h = 6.0;
  config.n = 2000;
  config.trials = 20;
  config.probes = 30;
  config.restarts = 6;
  config.seed = 13;
  TrialReport r = theorem_re_experiment(fw, sigma, cone, config);
  CHECK(r.pass);  // joint event frequency within delta + 3 SE
  CHECK(r.extra["re_population"].get<double>() ==
        doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.params["alpha_tilde"].get<double>() ==
        doctest::Approx(3.0 * std::sqrt(1.4 / 0.6)));
}

TEST_CASE("lasso rate experiment smoke run") {
  EnsembleSpec g = EnsembleSpec::Gaussian(SymMatrix::Identity(30));
  LassoRateConfig config;
  config.s = 3;
  config.n_grid = {100, 200, 400};
  config.trials = 10;
  config.seed = 19;
  TrialReport r = lasso_rate_experiment(g, config);
  double slope = r.extra["slope"].get<double>();
  CHECK(slope < -0.5);
  CHECK(slope > -1.6);
  CHECK(r.extra["per_n"].size() == 3);
}
