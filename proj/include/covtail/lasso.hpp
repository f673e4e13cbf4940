#pragma once

#include <Eigen/Dense>
#include <vector>

#include "covtail/ensembles.hpp"
#include "covtail/report.hpp"
#include "covtail/sparse_re.hpp"

namespace covtail {

/// Coordinate-descent minimizer of (1/n) sum (x_i^T b - Y_i)^2 + lambda |b|_1.
/// Converged when the KKT residuals of the subgradient conditions are within
/// tol; throws NumericError with the residual gap otherwise.
Eigen::VectorXd lasso_fit(const SampleBatch& batch, double lambda,
                          double tol = 1e-8, int max_iters = 100000);

struct LassoRateConfig {
  int s = 5;                       // sparsity of beta_min (support {0..s-1})
  std::vector<int> n_grid;
  double sigma_noise = 1.0;
  double kappa = 4.0;              // lambda = kappa sigma sqrt(log p / n)
  double cone_alpha = 3.0;
  int trials = 50;
  double tol = 1e-7;
  int max_iters = 100000;
  std::uint64_t seed = 0;
  int workers = 0;
};

/// Sparse-recovery rate study: for each n in the grid, fits the LASSO on the
/// diagonally normalized design and records |Sigma_hat^{1/2}(b_hat -
/// beta_min)|_2^2 plus cone membership of the error vector. Reports the
/// median error per n and the fitted log-log slope versus n.
TrialReport lasso_rate_experiment(const EnsembleSpec& ensemble,
                                  const LassoRateConfig& config);

}  // namespace covtail
