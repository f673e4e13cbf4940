#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <set>

#include "covtail/errors.hpp"
#include "covtail/parallel.hpp"
#include "covtail/report.hpp"
#include "covtail/seed.hpp"
#include "covtail/sym_matrix.hpp"

using namespace covtail;

TEST_CASE("SymMatrix construction is bit-exact symmetric") {
  Eigen::MatrixXd m(3, 3);
  m << 1, 2.0000001, 3, 2, 5, 6, 3, 6.0000002, 9;
  SymMatrix s(m);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(s(i, j) == s(j, i));
  CHECK(s.trace() == doctest::Approx(15.0));
}

TEST_CASE("eigendecomposition matches known spectra") {
  Eigen::VectorXd d(3);
  d << 2.0, 7.0, 1.0;
  auto eig = sym_eigendecomposition(SymMatrix::Diagonal(d));
  CHECK(eig.eigenvalues(0) == doctest::Approx(7.0));
  CHECK(eig.eigenvalues(1) == doctest::Approx(2.0));
  CHECK(eig.eigenvalues(2) == doctest::Approx(1.0));

  // 2x2 with analytic eigenvalues 1 +- rho
  Eigen::MatrixXd c(2, 2);
  c << 1, 0.6, 0.6, 1;
  auto e2 = sym_eigendecomposition(SymMatrix(c));
  CHECK(e2.eigenvalues(0) == doctest::Approx(1.6).epsilon(1e-12));
  CHECK(e2.eigenvalues(1) == doctest::Approx(0.4).epsilon(1e-12));

  // reconstruction A = V diag V^T
  Rng rng = make_rng(1, 0);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd raw(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) raw(i, j) = normal(rng);
  SymMatrix a(Eigen::MatrixXd(raw + raw.transpose()));
  auto e = sym_eigendecomposition(a);
  Eigen::MatrixXd rec =
      e.eigenvectors * e.eigenvalues.asDiagonal() * e.eigenvectors.transpose();
  CHECK((rec - a.mat()).cwiseAbs().maxCoeff() < 1e-10);
  for (int i = 1; i < 5; ++i) CHECK(e.eigenvalues(i - 1) >= e.eigenvalues(i));
}

TEST_CASE("spectral transforms") {
  Eigen::VectorXd d(3);
  d << 4.0, 9.0, 0.0;
  SymMatrix a = SymMatrix::Diagonal(d);

  SymMatrix half = psd_sqrt(a);
  CHECK(half(0, 0) == doctest::Approx(2.0));
  CHECK(half(1, 1) == doctest::Approx(3.0));
  CHECK(half(2, 2) == doctest::Approx(0.0));

  SymMatrix inv_half = psd_sqrt_pseudoinverse(a);
  CHECK(inv_half(0, 0) == doctest::Approx(0.5));
  CHECK(inv_half(2, 2) == doctest::Approx(0.0));

  SymMatrix pinv = psd_pseudoinverse(a);
  CHECK(pinv(0, 0) == doctest::Approx(0.25));
  CHECK(pinv(1, 1) == doctest::Approx(1.0 / 9));

  SymMatrix proj = range_projector(a);
  CHECK(proj(0, 0) == doctest::Approx(1.0));
  CHECK(proj(2, 2) == doctest::Approx(0.0));

  Eigen::VectorXd neg(2);
  neg << 1.0, -0.5;
  CHECK_THROWS_AS(psd_sqrt(SymMatrix::Diagonal(neg)), NotPsdError);
}

TEST_CASE("sym csv round trip") {
  Eigen::MatrixXd m(2, 2);
  m << 1.25, -0.75, -0.75, 3.5;
  SymMatrix a(m);
  std::string path = "core_roundtrip.csv";
  save_sym_csv(a, path);
  SymMatrix b = load_sym_csv(path);
  CHECK((a.mat() - b.mat()).cwiseAbs().maxCoeff() == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("seed mixing separates streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t master = 0; master < 8; ++master)
    for (std::uint64_t stream = 0; stream < 64; ++stream)
      seen.insert(mix_seed(master, stream));
  CHECK(seen.size() == 8 * 64);
  CHECK(mix_seed(5, 7) == mix_seed(5, 7));
}

TEST_CASE("parallel_for covers every index once and propagates exceptions") {
  const int count = 1000;
  std::vector<std::atomic<int>> hits(count);
  parallel_for(count, 8, [&](int i) { hits[i].fetch_add(1); });
  for (int i = 0; i < count; ++i) CHECK(hits[i].load() == 1);

  CHECK_THROWS_AS(parallel_for(10, 4,
                               [](int i) {
                                 if (i == 3) throw InputError("boom");
                               }),
                  InputError);
}

TEST_CASE("wilson interval") {
  auto [lo, hi] = wilson_interval(0, 100);
  CHECK(lo == 0.0);
  CHECK(hi > 0.0);
  CHECK(hi < 0.05);
  auto [lo2, hi2] = wilson_interval(50, 100);
  CHECK(lo2 < 0.5);
  CHECK(hi2 > 0.5);
  CHECK(lo2 == doctest::Approx(0.40383).epsilon(1e-3));
  CHECK_THROWS_AS(wilson_interval(5, 0), InputError);
  CHECK_THROWS_AS(wilson_interval(11, 10), InputError);
}

TEST_CASE("report json round trip is field-for-field") {
  TrialReport r;
  r.experiment = "demo";
  r.params = {{"n", 10}, {"delta", 0.1}};
  r.rows = {{0, 0.5, 0.4, true}, {1, 0.3, 0.4, false}, {2, 0.2, 0.4, false}};
  r.aggregate();
  r.bound_value = 0.4;
  r.pass = true;
  r.flag_reason = "";
  r.extra = {{"note", 1}};
  r.wall_seconds = 1.5;

  TrialReport back = report_from_json(report_to_json(r));
  CHECK(report_to_json(back) == report_to_json(r));
  CHECK(back.frequency == doctest::Approx(1.0 / 3));
  CHECK(back.violations == 1);

  // csv shape: header plus one line per trial
  write_report_csv(r, "core_report.csv");
  std::ifstream in("core_report.csv");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 4);
  std::remove("core_report.csv");
}
