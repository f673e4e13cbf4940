#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "covtail/distributions.hpp"
#include "covtail/seed.hpp"
#include "covtail/sym_matrix.hpp"

namespace covtail {

struct GaussianMeasure {
  Eigen::VectorXd mean;
  SymMatrix cov;

  GaussianMeasure(Eigen::VectorXd v, SymMatrix c);
};

/// Exact value of the quadratic form averaged over the Gaussian measure:
/// integral of <theta, B theta> dGamma_{v,C} = v^T B v + tr(B C).
double gaussian_smooth_quadratic(const SymMatrix& b, const GaussianMeasure& mu);

/// KL(N(v,C) | N(0,C)) = v^T C^{-1} v / 2. Throws on singular C.
double gaussian_kl(const Eigen::VectorXd& v, const SymMatrix& c);

/// Donsker-Varadhan inequality on a finite support:
/// sum h mu1 <= ln(sum e^h mu0) + KL(mu1|mu0).
struct VariationalResult {
  double lhs;
  double rhs;  // +inf when mu1 is not absolutely continuous wrt mu0
  bool holds;
};
VariationalResult variational_check(const Eigen::VectorXd& h_values,
                                    const Eigen::VectorXd& mu0,
                                    const Eigen::VectorXd& mu1);

/// Result of a Monte Carlo frequency-vs-bound comparison. Pass criterion is
/// frequency <= bound + 3 binomial standard errors throughout.
struct FrequencyReport {
  std::string check;
  int trials = 0;
  int hits = 0;
  double frequency = 0;
  double se = 0;
  double bound = 0;
  bool pass = false;
};

/// P( sum (W_i - E W_i) <= -sqrt(2 t n E W^2) ) vs e^{-t}.
FrequencyReport nonneg_lowertail_check(const ScalarDist& w, int n, double t,
                                       int trials, std::uint64_t seed);

/// Martingale path N_0..N_n with per-step predictable variances
/// E[D_i^2 | G_{i-1}].
struct MartingalePath {
  Eigen::VectorXd values;               // length n+1, values[0] == 0
  Eigen::VectorXd predictable_variance; // length n
};
using PathGenerator = std::function<MartingalePath(Rng&)>;

/// Gaussian random walk with i.i.d. N(0, step_sd^2) increments.
PathGenerator gaussian_walk(int n, double step_sd);

/// P( exists i : N_i > (xi/2) W_i + t/xi ) vs e^{-t}, where
/// W_i = sum_{j<=i} (E[D_j^2|G_{j-1}] + D_j^2).
FrequencyReport supermartingale_tail_check(const PathGenerator& generator,
                                           double xi, double t, int trials,
                                           std::uint64_t seed);

/// Moment form of the i.i.d. Burkholder-Davis-Gundy inequality:
/// (E |mean_n W - E W|^q)^{1/q} <= (2q/sqrt(n)) (E|W|^q)^{1/q}.
struct BdgReport {
  double lhs;
  double lhs_se;
  double rhs;
  bool holds;
};
BdgReport bdg_moment_check(const ScalarDist& w, double q, int n, int trials,
                           std::uint64_t seed);

}  // namespace covtail
