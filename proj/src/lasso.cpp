#include "covtail/lasso.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "covtail/errors.hpp"
#include "covtail/lowertail.hpp"
#include "covtail/parallel.hpp"

namespace covtail {

namespace {

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// worst KKT residual of 2(Sigma_hat b - c) + lambda sign(b) ∋ 0
double kkt_gap(const Eigen::VectorXd& grad_smooth, const Eigen::VectorXd& beta,
               double lambda) {
  double gap = 0.0;
  for (int j = 0; j < beta.size(); ++j) {
    double g = grad_smooth(j);
    if (beta(j) == 0.0)
      gap = std::max(gap, std::max(0.0, std::abs(g) - lambda));
    else
      gap = std::max(gap, std::abs(g + lambda * (beta(j) > 0 ? 1.0 : -1.0)));
  }
  return gap;
}

}  // namespace

Eigen::VectorXd lasso_fit(const SampleBatch& batch, double lambda, double tol,
                          int max_iters) {
  if (!batch.responses) throw InputError("lasso_fit: batch has no responses");
  if (lambda < 0) throw InputError("lasso_fit: lambda must be >= 0");
  const int p = batch.p();
  const double n = static_cast<double>(batch.n());

  Eigen::MatrixXd gram = batch.vectors.transpose() * batch.vectors / n;
  Eigen::VectorXd c = batch.vectors.transpose() * (*batch.responses) / n;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd gram_beta = Eigen::VectorXd::Zero(p);
  const int sweeps = std::max(1, max_iters / p);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (int j = 0; j < p; ++j) {
      double d = gram(j, j);
      double partial = c(j) - (gram_beta(j) - d * beta(j));
      double updated = d > 0 ? soft_threshold(partial, lambda / 2.0) / d : 0.0;
      double delta = updated - beta(j);
      if (delta != 0.0) {
        beta(j) = updated;
        gram_beta += gram.col(j) * delta;
      }
    }
    Eigen::VectorXd grad = 2.0 * (gram_beta - c);
    if (kkt_gap(grad, beta, lambda) <= tol) return beta;
  }
  Eigen::VectorXd grad = 2.0 * (gram_beta - c);
  throw NumericError("lasso_fit: diverged, KKT gap " +
                     std::to_string(kkt_gap(grad, beta, lambda)) + " after " +
                     std::to_string(sweeps) + " sweeps");
}

TrialReport lasso_rate_experiment(const EnsembleSpec& ensemble,
                                  const LassoRateConfig& config) {
  auto t_start = std::chrono::steady_clock::now();
  const int p = ensemble.dim();
  if (config.s < 1 || config.s > p)
    throw InputError("lasso_rate_experiment: s out of range");
  if (config.n_grid.empty())
    throw InputError("lasso_rate_experiment: empty n grid");
  for (int n : config.n_grid)
    if (n < 2) throw InputError("lasso_rate_experiment: n must be >= 2");
  if (config.trials < 1)
    throw InputError("lasso_rate_experiment: trials must be >= 1");

  std::vector<int> support(config.s);
  for (int j = 0; j < config.s; ++j) support[j] = j;
  ConeSpec cone(support, config.cone_alpha, p);
  Eigen::VectorXd beta_min = Eigen::VectorXd::Zero(p);
  for (int j = 0; j < config.s; ++j) beta_min(j) = (j % 2 == 0) ? 1.0 : -1.0;
  LinearModelSpec model{ensemble, beta_min, config.sigma_noise};

  std::vector<int> grid = config.n_grid;
  std::sort(grid.begin(), grid.end());
  const int n_points = static_cast<int>(grid.size());
  const int total = n_points * config.trials;

  TrialReport report;
  report.experiment = "lasso_rate";
  report.params = {{"p", p},
                   {"s", config.s},
                   {"n_grid", grid},
                   {"sigma_noise", config.sigma_noise},
                   {"kappa", config.kappa},
                   {"cone_alpha", config.cone_alpha},
                   {"trials", config.trials},
                   {"seed", config.seed},
                   {"ensemble", ensemble.name()}};
  report.rows.resize(total);

  std::vector<double> errors(total);
  std::vector<char> in_cone(total, 0);
  std::vector<char> degenerate(total, 0);
  parallel_for(total, config.workers, [&](int idx) {
    const int gi = idx / config.trials;
    const int n = grid[gi];
    SampleBatch batch =
        sample_linear_model(model, n, mix_seed(config.seed, idx));
    SymMatrix sigma_hat = empirical_covariance(batch);
    Eigen::VectorXd diag = sigma_hat.mat().diagonal();
    Eigen::VectorXd inv_sqrt(p), sqrt_diag(p);
    for (int j = 0; j < p; ++j) {
      if (diag(j) > 0) {
        sqrt_diag(j) = std::sqrt(diag(j));
        inv_sqrt(j) = 1.0 / sqrt_diag(j);
      } else {
        sqrt_diag(j) = inv_sqrt(j) = 0.0;
        degenerate[idx] = 1;
      }
    }
    // change of variables: normalized design, rescaled coefficients
    SampleBatch normalized{batch.vectors * inv_sqrt.asDiagonal(),
                           batch.responses};
    double lambda =
        config.kappa * config.sigma_noise * std::sqrt(std::log(p) / n);
    Eigen::VectorXd theta =
        lasso_fit(normalized, lambda, config.tol, config.max_iters);
    Eigen::VectorXd beta_hat = inv_sqrt.asDiagonal() * theta;
    Eigen::VectorXd diff = beta_hat - beta_min;
    errors[idx] = sigma_hat.quad(diff);
    in_cone[idx] = cone_membership(diff, cone);
    report.rows[idx] = {idx, errors[idx], 0.0, false};
  });

  // median error and cone frequency per grid point
  std::vector<double> medians(n_points);
  json per_n = json::array();
  bool any_degenerate = false;
  for (int gi = 0; gi < n_points; ++gi) {
    std::vector<double> errs(errors.begin() + gi * config.trials,
                             errors.begin() + (gi + 1) * config.trials);
    std::sort(errs.begin(), errs.end());
    int m = config.trials;
    medians[gi] = m % 2 ? errs[m / 2] : 0.5 * (errs[m / 2 - 1] + errs[m / 2]);
    int cone_hits = 0;
    for (int t = 0; t < config.trials; ++t) {
      cone_hits += in_cone[gi * config.trials + t];
      any_degenerate = any_degenerate || degenerate[gi * config.trials + t];
    }
    per_n.push_back({{"n", grid[gi]},
                     {"median_error", medians[gi]},
                     {"cone_fraction",
                      static_cast<double>(cone_hits) / config.trials}});
  }
  report.extra["per_n"] = per_n;
  if (any_degenerate) {
    report.flagged = true;
    report.flag_reason = "degenerate empirical diagonal in some trials";
  }

  // log-log slope of the median error versus n, by least squares
  double slope = 0.0;
  if (n_points >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int used = 0;
    for (int gi = 0; gi < n_points; ++gi) {
      if (medians[gi] <= 0) continue;
      double x = std::log(static_cast<double>(grid[gi]));
      double y = std::log(medians[gi]);
      sx += x; sy += y; sxx += x * x; sxy += x * y;
      ++used;
    }
    if (used >= 2) slope = (used * sxy - sx * sy) / (used * sxx - sx * sx);
  }
  report.extra["slope"] = slope;

  // single envelope constant: error <= c sigma^2 s log p / n across the grid
  double rate_c = 0.0;
  if (config.sigma_noise > 0) {
    for (int gi = 0; gi < n_points; ++gi)
      rate_c = std::max(rate_c, medians[gi] * grid[gi] /
                                    (config.sigma_noise * config.sigma_noise *
                                     config.s * std::log(p)));
  }
  report.extra["envelope_constant"] = rate_c;
  for (int idx = 0; idx < total; ++idx)
    report.rows[idx].bound = rate_c * config.sigma_noise *
                             config.sigma_noise * config.s * std::log(p) /
                             grid[idx / config.trials];
  report.aggregate();

  double cone_largest =
      per_n.back().at("cone_fraction").get<double>();
  report.extra["cone_fraction_largest_n"] = cone_largest;
  report.pass = slope > -1.3 && slope < -0.7 && cone_largest >= 0.9;

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

}  // namespace covtail
