#include "covtail/lowertail.hpp"

#include <chrono>
#include <cmath>

#include "covtail/errors.hpp"
#include "covtail/moments.hpp"
#include "covtail/parallel.hpp"

namespace covtail {

LowerTailBoundParams::LowerTailBoundParams(int p_, long n_, double delta_,
                                           double h_)
    : p(p_), n(n_), delta(delta_), h(h_) {
  if (p < 1) throw InputError("LowerTailBoundParams: p must be >= 1");
  if (n < 1) throw InputError("LowerTailBoundParams: n must be >= 1");
  if (!(delta > 0 && delta < 1))
    throw InputError("LowerTailBoundParams: delta must be in (0,1)");
  if (!(h > 1)) throw InputError("LowerTailBoundParams: h must be > 1");
}

double LowerTailBoundParams::t() const { return std::log(2.0 / delta); }

SymMatrix empirical_covariance(const SampleBatch& batch) {
  if (batch.n() < 1) throw InputError("empirical_covariance: empty batch");
  Eigen::MatrixXd m =
      batch.vectors.transpose() * batch.vectors / static_cast<double>(batch.n());
  return SymMatrix(m);
}

double relative_lower_eigenvalue(const SymMatrix& sigma_hat,
                                 const SymMatrix& sigma) {
  if (sigma_hat.dim() != sigma.dim())
    throw InputError("relative_lower_eigenvalue: dimension mismatch");
  const int p = sigma.dim();
  auto eig = sym_eigendecomposition(sigma);
  const double lmax = eig.eigenvalues(0);
  if (lmax < 0 || eig.eigenvalues(p - 1) < -kPsdTol * std::abs(lmax))
    throw NotPsdError("relative_lower_eigenvalue: sigma is not PSD");

  const double cutoff = kDefaultRankTol * std::max(lmax, 0.0);
  int rank = 0;
  while (rank < p && eig.eigenvalues(rank) > cutoff) ++rank;
  if (rank == 0)
    throw InputError("relative_lower_eigenvalue: sigma is the zero matrix");

  // rotate sigma_hat into sigma's eigenbasis; the trailing block is the
  // mass outside range(sigma)
  Eigen::MatrixXd rotated =
      eig.eigenvectors.transpose() * sigma_hat.mat() * eig.eigenvectors;
  double hat_norm = op_norm_and_min_eig(sigma_hat).first;
  if (rank < p) {
    double outside =
        rotated.bottomRightCorner(p - rank, p - rank).cwiseAbs().maxCoeff();
    if (outside > 1e-8 * std::max(hat_norm, 1e-300))
      throw InputError(
          "relative_lower_eigenvalue: sigma_hat has mass outside "
          "range(sigma)");
  }

  Eigen::VectorXd inv_sqrt(rank);
  for (int i = 0; i < rank; ++i)
    inv_sqrt(i) = 1.0 / std::sqrt(eig.eigenvalues(i));
  Eigen::MatrixXd whitened = inv_sqrt.asDiagonal() *
                             rotated.topLeftCorner(rank, rank) *
                             inv_sqrt.asDiagonal();
  return op_norm_and_min_eig(SymMatrix(whitened)).second;
}

BoundValue theorem_main_bound(const LowerTailBoundParams& params) {
  double margin =
      7.0 * params.h *
      std::sqrt((params.p + 2.0 * std::log(2.0 / params.delta)) / params.n);
  BoundValue b{1.0 - margin, false};
  b.vacuous = b.value <= 0.0;
  return b;
}

SymMatrix truncate_psd(const SymMatrix& b, double r) {
  if (!(r > 0)) throw InputError("truncate_psd: R must be > 0");
  double tr = b.trace();
  if (tr <= 0) return SymMatrix::Zero(b.dim());
  double scale = std::min(1.0, r / tr);
  return SymMatrix(scale * b.mat());
}

TrialReport lowertail_experiment(const EnsembleSpec& ensemble,
                                 const SymMatrix& sigma,
                                 const LowerTailExperimentConfig& config) {
  auto t_start = std::chrono::steady_clock::now();
  const int p = sigma.dim();
  if (ensemble.dim() != p)
    throw InputError("lowertail_experiment: ensemble/sigma dimension mismatch");
  if (config.trials < 1)
    throw InputError("lowertail_experiment: trials must be >= 1");

  TrialReport report;
  report.experiment = "lowertail";

  // resolve h: exact when available, else empirical calibration
  double h;
  bool calibrated = false;
  if (config.h) {
    h = *config.h;
  } else if (auto exact = exact_h(ensemble)) {
    h = *exact;
  } else {
    SampleBatch cal = sample_batch(ensemble, 100000, mix_seed(config.seed, 0xCA1));
    h = h_empirical(cal, sigma, 200, mix_seed(config.seed, 0xCA2));
    calibrated = true;
  }

  LowerTailBoundParams params(p, config.n, config.delta, h);
  BoundValue bound = theorem_main_bound(params);

  report.params = {{"p", p},
                   {"n", config.n},
                   {"delta", config.delta},
                   {"h", h},
                   {"trials", config.trials},
                   {"seed", config.seed},
                   {"ensemble", ensemble.name()}};
  report.bound_value = bound.value;
  report.vacuous = bound.vacuous;
  if (calibrated) {
    report.flagged = true;
    report.flag_reason = "calibrated: h estimated from data, excluded from acceptance gating";
  }

  report.rows.resize(config.trials);
  parallel_for(config.trials, config.workers, [&](int trial) {
    SampleBatch batch =
        sample_batch(ensemble, config.n, mix_seed(config.seed, trial));
    double stat = relative_lower_eigenvalue(empirical_covariance(batch), sigma);
    report.rows[trial] = {trial, stat, bound.value,
                          !bound.vacuous && stat < bound.value};
  });
  report.aggregate();

  if (bound.vacuous) {
    report.flagged = true;
    report.flag_reason = report.flag_reason.empty()
                             ? "vacuous bound: no pass/fail"
                             : report.flag_reason + "; vacuous bound";
    report.pass = false;
  } else {
    double se = std::sqrt(report.frequency * (1.0 - report.frequency) /
                          config.trials);
    report.pass = report.frequency <= config.delta + 3.0 * se;
  }

  // trace-truncation estimates on whitened single-sample matrices
  {
    const double r_level = config.truncation_multiple * h * h * p;
    SymMatrix white = psd_sqrt_pseudoinverse(sigma);
    SampleBatch draws =
        sample_batch(ensemble, config.truncation_draws, mix_seed(config.seed, 0x7A0));
    Rng rng = make_rng(config.seed, 0x7A1);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<Eigen::VectorXd> probes;
    for (int k = 0; k < config.truncation_probes; ++k) {
      Eigen::VectorXd v(p);
      for (int j = 0; j < p; ++j) v(j) = normal(rng);
      probes.push_back(v.normalized());
    }

    int pointwise_violations = 0;
    Eigen::ArrayXd trunc_trace_sq(config.truncation_draws);
    std::vector<Eigen::ArrayXd> quad(probes.size());
    for (auto& qv : quad) qv.resize(config.truncation_draws);

    for (int i = 0; i < config.truncation_draws; ++i) {
      Eigen::VectorXd y = white.mat() * draws.vectors.row(i).transpose();
      double tr = y.squaredNorm();  // tr(B) for rank-one B = y y^T
      double scale = tr > 0 ? std::min(1.0, r_level / tr) : 0.0;
      trunc_trace_sq(i) = (scale * tr) * (scale * tr);
      for (size_t k = 0; k < probes.size(); ++k) {
        double along = probes[k].dot(y);
        double full = along * along;
        double trunc = scale * full;
        if (trunc > full * (1.0 + 1e-12)) ++pointwise_violations;
        quad[k](i) = trunc;
      }
    }

    json trunc = json::object();
    trunc["r_level"] = r_level;
    trunc["pointwise_violations"] = pointwise_violations;
    double lower = 1.0 - h * h * p / r_level;
    json per_probe = json::array();
    bool mean_ok = true;
    for (size_t k = 0; k < probes.size(); ++k) {
      double m = quad[k].mean();
      double var = (quad[k] - m).square().sum() / (config.truncation_draws - 1);
      double se = std::sqrt(var / config.truncation_draws);
      bool ok = m >= lower - 3.0 * se;
      mean_ok = mean_ok && ok;
      per_probe.push_back({{"mean", m}, {"se", se}, {"lower", lower}, {"ok", ok}});
    }
    double mt = trunc_trace_sq.mean();
    double var = (trunc_trace_sq - mt).square().sum() /
                 (config.truncation_draws - 1);
    double se = std::sqrt(var / config.truncation_draws);
    bool trace_ok = mt <= h * h * p * p + 3.0 * se;
    trunc["mean_quadratic"] = per_probe;
    trunc["mean_trace_sq"] = {{"mean", mt}, {"se", se},
                              {"upper", h * h * p * p}, {"ok", trace_ok}};
    trunc["ok"] = pointwise_violations == 0 && mean_ok && trace_ok;
    report.extra["truncation"] = trunc;
    if (!trunc["ok"].get<bool>()) report.pass = false;
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

}  // namespace covtail
