#include "covtail/moments.hpp"

#include <cmath>

#include "covtail/errors.hpp"

namespace covtail {

MomentConstants::MomentConstants(double h_, double h_star_, double q_)
    : h(h_), h_star(h_star_), q(q_) {
  if (!(h >= 1.0))
    throw InputError("MomentConstants: h must be >= 1 (Jensen)");
  if (!(h_star >= 1.0))
    throw InputError("MomentConstants: h_star must be >= 1 (Jensen)");
  if (!(q >= 2.0)) throw InputError("MomentConstants: q must be >= 2");
}

double h_exact_independent(const Eigen::VectorXd& second_moments,
                           const Eigen::VectorXd& fourth_moments) {
  if (second_moments.size() != fourth_moments.size())
    throw InputError("h_exact_independent: moment vectors differ in length");
  double worst = 1.0;
  for (int j = 0; j < second_moments.size(); ++j) {
    double m2 = second_moments(j);
    double m4 = fourth_moments(j);
    if (m2 < 0) throw InputError("h_exact_independent: negative second moment");
    if (m4 < m2 * m2 * (1.0 - 1e-12)) {
      throw InputError("h_exact_independent: E X^4 < (E X^2)^2 at coordinate " +
                       std::to_string(j) + " violates Jensen");
    }
    if (m2 > 0) worst = std::max(worst, std::sqrt(m4) / m2);
  }
  return std::max(6.0, worst);
}

double h_empirical(const SampleBatch& batch, const SymMatrix& sigma,
                   int directions, std::uint64_t seed) {
  if (directions < 1) throw InputError("h_empirical: directions must be >= 1");
  const int p = batch.p();
  if (sigma.dim() != p)
    throw InputError("h_empirical: sigma dimension does not match batch");
  const double lmax = op_norm_and_min_eig(sigma).first;
  const double degenerate = 1e-12 * lmax;

  Rng rng = make_rng(seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  double best = 0.0;
  bool any = false;

  auto probe = [&](const Eigen::VectorXd& v) {
    double denom = sigma.quad(v);
    if (denom <= degenerate) return;
    Eigen::VectorXd proj = batch.vectors * v;
    double mean4 = proj.array().square().square().mean();
    best = std::max(best, std::sqrt(mean4) / denom);
    any = true;
  };

  for (int j = 0; j < p; ++j) probe(Eigen::VectorXd::Unit(p, j));
  for (int k = 0; k < directions; ++k) {
    Eigen::VectorXd v(p);
    for (int j = 0; j < p; ++j) v(j) = normal(rng);
    double norm = v.norm();
    if (norm == 0) continue;
    probe(v / norm);
  }
  if (!any) throw NumericError("h_empirical: all probe directions degenerate");
  return best;
}

HStarResult hstar_scalar(double fourth_moment, double second_moment) {
  if (second_moment <= 0)
    throw InputError("hstar_scalar: second moment must be positive");
  if (fourth_moment < second_moment * second_moment * (1.0 - 1e-12))
    throw InputError("hstar_scalar: E xi^4 < (E xi^2)^2 violates Jensen");
  HStarResult r;
  r.corrected = std::sqrt(fourth_moment) / second_moment;
  r.literal = std::sqrt(fourth_moment / second_moment);
  return r;
}

PowertraceReport powertrace_check(const EnsembleSpec& vector_ensemble, double q,
                                  double h, int trials, std::uint64_t seed) {
  if (q < 1) throw InputError("powertrace_check: q must be >= 1");
  if (trials < 2) throw InputError("powertrace_check: trials must be >= 2");
  const double mean_trace = population_covariance(vector_ensemble).trace();

  // tr(X X^T) = |X|^2, so one draw per trial suffices
  SampleBatch batch = sample_batch(vector_ensemble, trials, seed);
  Eigen::ArrayXd traces = batch.vectors.rowwise().squaredNorm().array();
  Eigen::ArrayXd powered = traces.pow(q);

  PowertraceReport r;
  r.trials = trials;
  r.lhs_estimate = powered.mean();
  double var = (powered - r.lhs_estimate).square().sum() / (trials - 1);
  r.lhs_se = std::sqrt(var / trials);
  r.rhs = std::pow(h, q) * std::pow(mean_trace, q);
  r.violation = r.lhs_estimate > r.rhs + 5.0 * r.lhs_se;
  return r;
}

}  // namespace covtail
