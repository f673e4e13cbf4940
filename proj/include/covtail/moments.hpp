#pragma once

#include <Eigen/Dense>

#include "covtail/ensembles.hpp"
#include "covtail/sym_matrix.hpp"

namespace covtail {

/// Moment-equivalence constants. Jensen forces h >= 1 and h_star >= 1;
/// construction rejects anything smaller.
struct MomentConstants {
  double h;
  double h_star;
  double q;

  MomentConstants(double h_, double h_star_, double q_);
};

/// h for a mean-zero independent-coordinate vector:
/// 6 v max_j sqrt(E X[j]^4) / E X[j]^2 over coordinates with E X[j]^2 > 0.
double h_exact_independent(const Eigen::VectorXd& second_moments,
                           const Eigen::VectorXd& fourth_moments);

/// Lower estimate of h from data: max over sampled unit directions (uniform
/// sphere plus coordinate axes) of sqrt(mean (v^T X_i)^4) / (v^T Sigma v).
/// Only falsifiable from below; the true h may exceed the estimate.
double h_empirical(const SampleBatch& batch, const SymMatrix& sigma,
                   int directions, std::uint64_t seed);

/// h_star for a scalar mixer. `corrected` reads the fourth-moment condition
/// as E xi^4 <= h_star^2 (E xi^2)^2; `literal` keeps the unsquared second
/// moment. The corrected value is the one used everywhere downstream.
struct HStarResult {
  double corrected;
  double literal;
};
HStarResult hstar_scalar(double fourth_moment, double second_moment);

/// Monte Carlo falsifier for the trace-power bound
/// E tr(A)^q <= h^q (E tr A)^q with A = X X^T.
struct PowertraceReport {
  double lhs_estimate;
  double lhs_se;
  double rhs;
  int trials;
  bool violation;
};
PowertraceReport powertrace_check(const EnsembleSpec& vector_ensemble, double q,
                                  double h, int trials, std::uint64_t seed);

}  // namespace covtail
