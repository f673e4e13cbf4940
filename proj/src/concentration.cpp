#include "covtail/concentration.hpp"

#include <cmath>
#include <limits>

#include "covtail/errors.hpp"

namespace covtail {

namespace {

double binomial_se(int hits, int trials) {
  double f = static_cast<double>(hits) / trials;
  return std::sqrt(f * (1.0 - f) / trials);
}

}  // namespace

GaussianMeasure::GaussianMeasure(Eigen::VectorXd v, SymMatrix c)
    : mean(std::move(v)), cov(std::move(c)) {
  if (mean.size() != cov.dim())
    throw InputError("GaussianMeasure: mean and covariance dimensions differ");
  auto [lmax, lmin] = op_norm_and_min_eig(cov);
  if (lmin < -kPsdTol * std::max(lmax, 0.0))
    throw NotPsdError("GaussianMeasure: covariance is not PSD");
}

double gaussian_smooth_quadratic(const SymMatrix& b, const GaussianMeasure& mu) {
  if (b.dim() != mu.cov.dim())
    throw InputError("gaussian_smooth_quadratic: dimension mismatch");
  return b.quad(mu.mean) + (b.mat() * mu.cov.mat()).trace();
}

double gaussian_kl(const Eigen::VectorXd& v, const SymMatrix& c) {
  if (v.size() != c.dim()) throw InputError("gaussian_kl: dimension mismatch");
  auto eig = sym_eigendecomposition(c);
  const int p = c.dim();
  double lmax = eig.eigenvalues(0);
  double lmin = eig.eigenvalues(p - 1);
  if (lmin <= kDefaultRankTol * std::max(lmax, 0.0))
    throw InputError("gaussian_kl: covariance is singular");
  Eigen::VectorXd w = eig.eigenvectors.transpose() * v;
  double kl = 0.0;
  for (int i = 0; i < p; ++i) kl += w(i) * w(i) / eig.eigenvalues(i);
  return 0.5 * kl;
}

VariationalResult variational_check(const Eigen::VectorXd& h_values,
                                    const Eigen::VectorXd& mu0,
                                    const Eigen::VectorXd& mu1) {
  const auto m = h_values.size();
  if (mu0.size() != m || mu1.size() != m)
    throw InputError("variational_check: support sizes differ");
  auto validate = [](const Eigen::VectorXd& mu, const char* name) {
    if ((mu.array() < 0).any())
      throw InputError(std::string("variational_check: ") + name +
                       " has a negative entry");
    if (std::abs(mu.sum() - 1.0) > 1e-12)
      throw InputError(std::string("variational_check: ") + name +
                       " does not sum to 1");
  };
  validate(mu0, "mu0");
  validate(mu1, "mu1");

  VariationalResult r;
  r.lhs = h_values.dot(mu1);

  double kl = 0.0;
  bool absolutely_continuous = true;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (mu1(i) == 0.0) continue;  // 0 ln(0/q) = 0
    if (mu0(i) == 0.0) {
      absolutely_continuous = false;  // p ln(p/0) = +inf
      break;
    }
    kl += mu1(i) * std::log(mu1(i) / mu0(i));
  }
  if (!absolutely_continuous) {
    r.rhs = std::numeric_limits<double>::infinity();
    r.holds = true;
    return r;
  }
  // log-sum-exp for ln E_0 e^h
  double hmax = h_values.maxCoeff();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    acc += mu0(i) * std::exp(h_values(i) - hmax);
  r.rhs = hmax + std::log(acc) + kl;
  r.holds = r.lhs <= r.rhs + 1e-12;
  return r;
}

FrequencyReport nonneg_lowertail_check(const ScalarDist& w, int n, double t,
                                       int trials, std::uint64_t seed) {
  if (!w.nonnegative())
    throw InputError("nonneg_lowertail_check: W must be non-negative, got " +
                     w.name());
  if (t < 0) throw InputError("nonneg_lowertail_check: t must be >= 0");
  if (n < 1 || trials < 1)
    throw InputError("nonneg_lowertail_check: n and trials must be >= 1");

  const double mean = w.mean();
  const double threshold = -std::sqrt(2.0 * t * n * w.moment2());

  FrequencyReport r;
  r.check = "concnonneg";
  r.trials = trials;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = make_rng(seed, trial);
    double dev = 0.0;
    for (int i = 0; i < n; ++i) dev += w.sample(rng) - mean;
    if (dev <= threshold) ++r.hits;
  }
  r.frequency = static_cast<double>(r.hits) / trials;
  r.se = binomial_se(r.hits, trials);
  r.bound = std::exp(-t);
  r.pass = r.frequency <= r.bound + 3.0 * r.se;
  return r;
}

PathGenerator gaussian_walk(int n, double step_sd) {
  if (n < 1) throw InputError("gaussian_walk: n must be >= 1");
  if (step_sd < 0) throw InputError("gaussian_walk: step_sd must be >= 0");
  return [n, step_sd](Rng& rng) {
    std::normal_distribution<double> normal(0.0, step_sd);
    MartingalePath path;
    path.values.resize(n + 1);
    path.predictable_variance =
        Eigen::VectorXd::Constant(n, step_sd * step_sd);
    path.values(0) = 0.0;
    for (int i = 1; i <= n; ++i) path.values(i) = path.values(i - 1) + normal(rng);
    return path;
  };
}

FrequencyReport supermartingale_tail_check(const PathGenerator& generator,
                                           double xi, double t, int trials,
                                           std::uint64_t seed) {
  if (xi <= 0) throw InputError("supermartingale_tail_check: xi must be > 0");
  if (t < 0) throw InputError("supermartingale_tail_check: t must be >= 0");
  if (trials < 1)
    throw InputError("supermartingale_tail_check: trials must be >= 1");

  FrequencyReport r;
  r.check = "supermartingale";
  r.trials = trials;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = make_rng(seed, trial);
    MartingalePath path = generator(rng);
    const int n = static_cast<int>(path.values.size()) - 1;
    if (n < 1 || path.values(0) != 0.0)
      throw InputError("supermartingale_tail_check: path must start at N_0 = 0");
    if (path.predictable_variance.size() != n)
      throw InputError(
          "supermartingale_tail_check: predictable variance missing or "
          "mismatched");
    double w = 0.0;
    bool crossed = false;
    for (int i = 1; i <= n; ++i) {
      double d = path.values(i) - path.values(i - 1);
      w += path.predictable_variance(i - 1) + d * d;
      if (path.values(i) > 0.5 * xi * w + t / xi) {
        crossed = true;
        break;
      }
    }
    if (crossed) ++r.hits;
  }
  r.frequency = static_cast<double>(r.hits) / trials;
  r.se = binomial_se(r.hits, trials);
  r.bound = std::exp(-t);
  r.pass = r.frequency <= r.bound + 3.0 * r.se;
  return r;
}

BdgReport bdg_moment_check(const ScalarDist& w, double q, int n, int trials,
                           std::uint64_t seed) {
  if (q < 2) throw InputError("bdg_moment_check: q must be >= 2");
  if (n < 1 || trials < 2)
    throw InputError("bdg_moment_check: n must be >= 1, trials >= 2");
  auto moment = w.abs_moment(q);
  if (!moment)
    throw InputError("bdg_moment_check: no closed-form E|W|^q for " + w.name());

  const double mean = w.mean();
  Eigen::ArrayXd devs(trials);
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = make_rng(seed, trial);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += w.sample(rng);
    devs(trial) = std::pow(std::abs(acc / n - mean), q);
  }
  double m = devs.mean();
  double var = (devs - m).square().sum() / (trials - 1);
  double m_se = std::sqrt(var / trials);

  BdgReport r;
  r.lhs = std::pow(m, 1.0 / q);
  // delta method for the q-th root
  r.lhs_se = m > 0 ? m_se * std::pow(m, 1.0 / q - 1.0) / q : 0.0;
  r.rhs = (2.0 * q / std::sqrt(static_cast<double>(n))) *
          std::pow(*moment, 1.0 / q);
  r.holds = r.lhs <= r.rhs + 3.0 * r.lhs_se;
  return r;
}

}  // namespace covtail
