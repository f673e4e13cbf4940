#include "covtail/ols.hpp"

#include <chrono>
#include <cmath>

#include "covtail/errors.hpp"
#include "covtail/lowertail.hpp"
#include "covtail/parallel.hpp"

namespace covtail {

OlsBoundParams::OlsBoundParams(double eta_, double epsilon_, double delta_,
                               double q_, SymMatrix lambda_, double h_,
                               double h_star_, long n_)
    : eta(eta_),
      epsilon(epsilon_),
      delta(delta_),
      q(q_),
      lambda_matrix(std::move(lambda_)),
      h(h_),
      h_star(h_star_),
      n(n_) {
  auto in_unit = [](double x) { return x > 0 && x < 1; };
  if (!(eta > 0)) throw InputError("OlsBoundParams: eta must be positive");
  if (!in_unit(epsilon))
    throw InputError("OlsBoundParams: epsilon must be in (0,1)");
  if (!in_unit(delta))
    throw InputError("OlsBoundParams: delta must be in (0,1)");
  if (!(q >= 2)) throw InputError("OlsBoundParams: q must be >= 2");
  if (n < 1) throw InputError("OlsBoundParams: n must be >= 1");
  auto [lmax, lmin] = op_norm_and_min_eig(lambda_matrix);
  if (lmin < -kPsdTol * std::max(lmax, 0.0))
    throw NotPsdError("OlsBoundParams: Lambda is not PSD");
}

double c_eta(double eta) {
  if (eta <= 0) throw InputError("c_eta: eta must be > 0");
  return (2.0 + eta) * (4.0 + 3.0 * eta) / (4.0 * eta);
}

double d_q_eta(double eta, double q) {
  if (eta <= 0) throw InputError("d_q_eta: eta must be > 0");
  double r = (2.0 + eta) * q / eta;
  return r * r;
}

Eigen::VectorXd ols_fit(const SampleBatch& batch) {
  if (!batch.responses)
    throw InputError("ols_fit: batch has no responses");
  SymMatrix sigma_hat = empirical_covariance(batch);
  Eigen::VectorXd moment = batch.vectors.transpose() * (*batch.responses) /
                           static_cast<double>(batch.n());
  return psd_pseudoinverse(sigma_hat).mat() * moment;
}

double excess_loss(const Eigen::VectorXd& beta_hat,
                   const Eigen::VectorXd& beta_min, const SymMatrix& sigma) {
  if (beta_hat.size() != beta_min.size() || beta_hat.size() != sigma.dim())
    throw InputError("excess_loss: dimension mismatch");
  Eigen::VectorXd diff = beta_hat - beta_min;
  return std::max(0.0, sigma.quad(diff));
}

double ols_bound(const OlsBoundParams& params) {
  double lmax = op_norm_and_min_eig(params.lambda_matrix).first;
  double numerator = (1.0 + params.eta) * params.lambda_matrix.trace() +
                     c_eta(params.eta) * lmax * std::log(3.0 / params.delta);
  double shrink = 1.0 - params.epsilon;
  return numerator / (shrink * shrink * params.n);
}

SampleCondition ols_sample_condition(int p, double delta, double epsilon,
                                     double eta, double q, double h,
                                     double h_star) {
  if (p < 1) throw InputError("ols_sample_condition: p must be >= 1");
  if (!(delta > 0 && delta < 1) || !(epsilon > 0 && epsilon < 1))
    throw InputError(
        "ols_sample_condition: delta and epsilon must be in (0,1)");
  if (!(eta > 0)) throw InputError("ols_sample_condition: eta must be positive");
  if (!(q >= 2)) throw InputError("ols_sample_condition: q must be >= 2");
  SampleCondition c;
  double dims = p + 2.0 * std::log(6.0 / delta);
  c.term1 = 49.0 * h * h * dims / (epsilon * epsilon);
  c.term1_literal = 49.0 * dims / (h * h * epsilon * epsilon);
  c.term2 = std::pow(6.0, 2.0 / q) * (2.0 + eta) * (2.0 + eta) * q * q *
            (h_star + 1.0) / (std::pow(delta, 2.0 / q) * eta * eta);
  c.n_min = static_cast<long>(std::ceil(std::max(c.term1, c.term2)));
  return c;
}

TrialReport vector_sum_experiment(const EnsembleSpec& z_ensemble,
                                  const SymMatrix& lambda,
                                  const VectorSumConfig& config) {
  auto t_start = std::chrono::steady_clock::now();
  const int p = lambda.dim();
  if (z_ensemble.dim() != p)
    throw InputError("vector_sum_experiment: ensemble/Lambda dimension mismatch");
  if (config.trials < 2)
    throw InputError("vector_sum_experiment: trials must be >= 2");
  if (!(config.claim_alpha > 0))
    throw InputError("vector_sum_experiment: claim_alpha must be > 0");

  const double tr_lambda = lambda.trace();
  const double lmax = op_norm_and_min_eig(lambda).first;

  // calibration: declared second moments must dominate sampled ones
  {
    const int n_cal = 20000;
    SampleBatch cal = sample_batch(z_ensemble, n_cal, mix_seed(config.seed, 0xCAF));
    Rng rng = make_rng(config.seed, 0xCB0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Eigen::VectorXd> dirs;
    for (int j = 0; j < p; ++j) dirs.push_back(Eigen::VectorXd::Unit(p, j));
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd v(p);
      for (int j = 0; j < p; ++j) v(j) = normal(rng);
      dirs.push_back(v.normalized());
    }
    for (const auto& v : dirs) {
      Eigen::ArrayXd proj = (cal.vectors * v).array().square();
      double m = proj.mean();
      double var = (proj - m).square().sum() / (n_cal - 1);
      double se = std::sqrt(var / n_cal);
      if (m > lambda.quad(v) + 5.0 * se)
        throw NumericError(
            "vector_sum_experiment: sampled second moment exceeds declared "
            "Lambda by > 5 SE (calibration error)");
    }
  }

  const double threshold =
      std::sqrt((1.0 + config.eta) * tr_lambda +
                c_eta(config.eta) * lmax * config.t);
  const double poly_term =
      2.0 * std::pow(d_q_eta(config.eta, config.q) * (config.h_star + 1.0) /
                         config.n,
                     config.q / 2.0);
  const double bound = std::exp(-config.t) + poly_term;

  const double alpha = config.claim_alpha;
  const double claim_bound = std::pow(
      config.q * config.q * (config.h_star + 1.0) / (alpha * alpha * config.n),
      config.q / 2.0);

  TrialReport report;
  report.experiment = "vector_sum";
  report.params = {{"p", p},           {"n", config.n},
                   {"eta", config.eta}, {"t", config.t},
                   {"q", config.q},     {"h_star", config.h_star},
                   {"trials", config.trials}, {"seed", config.seed},
                   {"claim_alpha", alpha},
                   {"ensemble", z_ensemble.name()}};
  report.bound_value = bound;
  report.rows.resize(config.trials);

  std::vector<char> norm_hits(config.trials, 0);
  std::vector<char> quadvar_hits(config.trials, 0);
  parallel_for(config.trials, config.workers, [&](int trial) {
    SampleBatch batch =
        sample_batch(z_ensemble, config.n, mix_seed(config.seed, trial));
    Eigen::VectorXd running = Eigen::VectorXd::Zero(p);
    double sum_sq = 0.0;
    double quad_var = 0.0;
    for (int i = 0; i < config.n; ++i) {
      Eigen::VectorXd z = batch.vectors.row(i).transpose();
      double norm = running.norm();
      if (norm > 0) {
        double along = running.dot(z) / norm;
        quad_var += along * along;
      }
      sum_sq += z.squaredNorm();
      running += z;
    }
    double stat = running.norm() / std::sqrt(static_cast<double>(config.n));
    report.rows[trial] = {trial, stat, threshold, stat > threshold};
    norm_hits[trial] = sum_sq >= (1.0 + alpha) * config.n * tr_lambda;
    quadvar_hits[trial] = quad_var > (1.0 + alpha) * config.n * lmax;
  });
  report.aggregate();

  double se = std::sqrt(report.frequency * (1.0 - report.frequency) /
                        config.trials);
  report.pass = report.frequency <= bound + 3.0 * se;

  auto sub_check = [&](const std::vector<char>& hits, const char* name) {
    int count = 0;
    for (char hit : hits) count += hit;
    double freq = static_cast<double>(count) / config.trials;
    double sub_se = std::sqrt(freq * (1.0 - freq) / config.trials);
    bool ok = freq <= claim_bound + 3.0 * sub_se;
    report.extra[name] = {{"frequency", freq}, {"bound", claim_bound},
                          {"se", sub_se}, {"ok", ok}};
    if (!ok) report.pass = false;
  };
  sub_check(norm_hits, "claim_sum_sq");
  sub_check(quadvar_hits, "claim_quad_variation");

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

TrialReport ols_experiment(const LinearModelSpec& model,
                           const OlsExperimentConfig& config) {
  auto t_start = std::chrono::steady_clock::now();
  const auto& params = config.params;
  const int p = model.design.dim();
  if (config.trials < 2)
    throw InputError("ols_experiment: trials must be >= 2");

  SymMatrix sigma = population_covariance(model.design);
  double bound = ols_bound(params);
  SampleCondition condition =
      ols_sample_condition(p, params.delta, params.epsilon, params.eta,
                           params.q, params.h, params.h_star);

  TrialReport report;
  report.experiment = "ols";
  report.params = {{"p", p},
                   {"n", params.n},
                   {"eta", params.eta},
                   {"epsilon", params.epsilon},
                   {"delta", params.delta},
                   {"q", params.q},
                   {"h", params.h},
                   {"h_star", params.h_star},
                   {"noise_sigma", model.noise_sigma},
                   {"trials", config.trials},
                   {"seed", config.seed}};
  report.bound_value = bound;

  bool regime_ok = params.n >= condition.n_min;
  report.extra["regime_ok"] = regime_ok;
  report.extra["n_required"] = condition.n_min;
  if (!regime_ok) {
    report.flagged = true;
    report.flag_reason = "out of regime: n below the sample-size condition";
  }

  report.rows.resize(config.trials);
  std::vector<double> excesses(config.trials);
  parallel_for(config.trials, config.workers, [&](int trial) {
    SampleBatch batch =
        sample_linear_model(model, params.n, mix_seed(config.seed, trial));
    Eigen::VectorXd beta_hat = ols_fit(batch);
    double excess = excess_loss(beta_hat, model.beta_min, sigma);
    excesses[trial] = excess;
    report.rows[trial] = {trial, excess, bound, excess > bound};
  });
  report.aggregate();

  double mean_excess = 0.0;
  for (double e : excesses) mean_excess += e;
  mean_excess /= config.trials;
  report.extra["mean_excess"] = mean_excess;
  report.extra["benchmark_tr_lambda_over_n"] =
      params.lambda_matrix.trace() / params.n;

  double se = std::sqrt(report.frequency * (1.0 - report.frequency) /
                        config.trials);
  report.pass = report.frequency <= params.delta + 3.0 * se;

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

}  // namespace covtail
