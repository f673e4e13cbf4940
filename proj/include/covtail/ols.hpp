#pragma once

#include <Eigen/Dense>

#include "covtail/ensembles.hpp"
#include "covtail/report.hpp"
#include "covtail/sym_matrix.hpp"

namespace covtail {

struct OlsBoundParams {
  double eta;      // in (0,1)
  double epsilon;  // in (0,1)
  double delta;    // in (0,1)
  double q;        // moment order >= 2
  SymMatrix lambda_matrix;
  double h;
  double h_star;
  long n;

  OlsBoundParams(double eta_, double epsilon_, double delta_, double q_,
                 SymMatrix lambda_, double h_, double h_star_, long n_);
};

/// c(eta) = (2+eta)(4+3eta)/(4 eta).
double c_eta(double eta);
/// d_q(eta) = (2+eta)^2 q^2 / eta^2.
double d_q_eta(double eta, double q);

/// Minimal-norm empirical loss minimizer via the pseudoinverse normal
/// equations.
Eigen::VectorXd ols_fit(const SampleBatch& batch);

/// (beta_hat - beta_min)^T Sigma (beta_hat - beta_min).
double excess_loss(const Eigen::VectorXd& beta_hat,
                   const Eigen::VectorXd& beta_min, const SymMatrix& sigma);

/// ((1+eta) tr(Lambda) + c(eta) lambda_max(Lambda) ln(3/delta)) / ((1-eps)^2 n).
double ols_bound(const OlsBoundParams& params);

/// Minimal n satisfying the two-part sample-size condition. `term1` uses the
/// 49 h^2 / eps^2 factor; `term1_literal` is the unsquared-h variant kept for
/// reference.
struct SampleCondition {
  long n_min;
  double term1;
  double term2;
  double term1_literal;
};
SampleCondition ols_sample_condition(int p, double delta, double epsilon,
                                     double eta, double q, double h,
                                     double h_star);

struct VectorSumConfig {
  double eta = 1.0;
  double t = 2.0;
  double q = 2.0;
  double h_star = 1.0;
  double claim_alpha = 0.5;  // alpha for the two norm/quadratic sub-checks
  int n = 1000;
  int trials = 10000;
  std::uint64_t seed = 0;
  int workers = 0;
};

/// Checks the vector-sum deviation bound
/// P(|sum Z_j|/sqrt(n) > sqrt((1+eta) tr L + c(eta) lmax(L) t))
///   <= e^{-t} + 2 (d_q(eta)(h*+1)/n)^{q/2}
/// plus the two polynomial sub-checks on sum |Z|^2 and the projected
/// quadratic variation.
TrialReport vector_sum_experiment(const EnsembleSpec& z_ensemble,
                                  const SymMatrix& lambda,
                                  const VectorSumConfig& config);

struct OlsExperimentConfig {
  OlsBoundParams params;
  int trials = 500;
  std::uint64_t seed = 0;
  int workers = 0;
};

/// Coverage experiment for the finite-sample OLS excess-loss bound on a
/// synthetic linear model with Gaussian noise.
TrialReport ols_experiment(const LinearModelSpec& model,
                           const OlsExperimentConfig& config);

}  // namespace covtail
