#include "covtail/runner.hpp"

#include <cmath>
#include <fstream>

#include "covtail/concentration.hpp"
#include "covtail/errors.hpp"
#include "covtail/lasso.hpp"
#include "covtail/lowertail.hpp"
#include "covtail/moments.hpp"
#include "covtail/ols.hpp"
#include "covtail/sparse_re.hpp"

namespace covtail {

namespace {

const json& require(const json& j, const std::string& key,
                    const std::string& path) {
  if (!j.contains(key))
    throw InputError("config: missing field " + path + "." + key);
  return j.at(key);
}

double get_or(const json& j, const std::string& key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

int get_or(const json& j, const std::string& key, int fallback) {
  return j.contains(key) ? j.at(key).get<int>() : fallback;
}

// 1-based support list from config to 0-based indices
std::vector<int> support_from_json(const json& j) {
  std::vector<int> out;
  for (const auto& v : j) out.push_back(v.get<int>() - 1);
  return out;
}

ConeSpec cone_from_json(const json& j, int p) {
  return ConeSpec(support_from_json(require(j, "support", "params.cone")),
                  require(j, "alpha", "params.cone").get<double>(), p);
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}

int workers_from_json(const json& config) {
  if (!config.contains("workers")) return 0;
  const json& w = config.at("workers");
  if (w.is_string()) {
    if (w.get<std::string>() == "auto") return 0;
    throw InputError("config: workers must be a count or \"auto\"");
  }
  return w.get<int>();
}

TrialReport run_lowertail(const json& params, std::uint64_t seed, int trials,
                          int workers) {
  EnsembleSpec ensemble =
      ensemble_from_json(require(params, "ensemble", "params"));
  SymMatrix sigma = params.contains("sigma")
                        ? matrix_from_json(params.at("sigma"))
                        : population_covariance(ensemble);
  LowerTailExperimentConfig config;
  config.n = require(params, "n", "params").get<int>();
  config.delta = get_or(params, "delta", 0.1);
  if (params.contains("h")) config.h = params.at("h").get<double>();
  config.trials = trials;
  config.seed = seed;
  config.workers = workers;
  config.truncation_multiple = get_or(params, "truncation_multiple", 4.0);
  config.truncation_draws = get_or(params, "truncation_draws", 20000);
  config.truncation_probes = get_or(params, "truncation_probes", 5);
  return lowertail_experiment(ensemble, sigma, config);
}

TrialReport run_ols(const json& params, std::uint64_t seed, int trials,
                    int workers) {
  EnsembleSpec design = ensemble_from_json(require(params, "design", "params"));
  const int p = design.dim();
  Eigen::VectorXd beta_min = params.contains("beta_min")
                                 ? vector_from_json(params.at("beta_min"))
                                 : Eigen::VectorXd::Zero(p);
  double noise_sigma = get_or(params, "noise_sigma", 1.0);
  double h;
  if (params.contains("h")) {
    h = params.at("h").get<double>();
  } else if (auto exact = exact_h(design)) {
    h = *exact;
  } else {
    throw InputError("config: params.h required for this design ensemble");
  }
  // sqrt(3) is exact for the Gaussian noise this experiment draws
  double h_star = get_or(params, "h_star", std::sqrt(3.0));
  SymMatrix sigma = population_covariance(design);
  SymMatrix lambda =
      params.contains("lambda")
          ? matrix_from_json(params.at("lambda"))
          : SymMatrix(noise_sigma * noise_sigma * range_projector(sigma).mat());
  OlsBoundParams bound_params(
      get_or(params, "eta", 1.0), get_or(params, "epsilon", 0.1),
      get_or(params, "delta", 0.1), get_or(params, "q", 2.0), lambda, h,
      h_star, require(params, "n", "params").get<long>());
  OlsExperimentConfig config{bound_params, trials, seed, workers};
  return ols_experiment({design, beta_min, noise_sigma}, config);
}

TrialReport run_vector_sum(const json& params, std::uint64_t seed, int trials,
                           int workers) {
  EnsembleSpec ensemble =
      ensemble_from_json(require(params, "ensemble", "params"));
  SymMatrix lambda = params.contains("lambda")
                         ? matrix_from_json(params.at("lambda"))
                         : population_covariance(ensemble);
  VectorSumConfig config;
  config.eta = get_or(params, "eta", 1.0);
  config.t = get_or(params, "t", 2.0);
  config.q = get_or(params, "q", 2.0);
  config.h_star = get_or(params, "h_star", 1.0);
  config.claim_alpha = get_or(params, "claim_alpha", 0.5);
  config.n = require(params, "n", "params").get<int>();
  config.trials = trials;
  config.seed = seed;
  config.workers = workers;
  return vector_sum_experiment(ensemble, lambda, config);
}

TrialReport run_re(const json& params, std::uint64_t seed, int trials,
                   int workers) {
  EnsembleSpec ensemble =
      ensemble_from_json(require(params, "ensemble", "params"));
  SymMatrix sigma = params.contains("sigma")
                        ? matrix_from_json(params.at("sigma"))
                        : population_covariance(ensemble);
  ConeSpec cone = cone_from_json(require(params, "cone", "params"), sigma.dim());
  TheoremReConfig config;
  config.eps = get_or(params, "eps", 0.1);
  config.delta = get_or(params, "delta", 0.1);
  config.q = get_or(params, "q", 3.0);
  if (params.contains("h")) {
    config.h = params.at("h").get<double>();
  } else if (auto exact = exact_h(ensemble)) {
    config.h = *exact;
  }
  config.h_star = get_or(params, "h_star", 1.0);
  config.n = require(params, "n", "params").get<int>();
  config.trials = trials;
  config.probes = get_or(params, "probes", 50);
  config.restarts = get_or(params, "restarts", 8);
  config.seed = seed;
  config.workers = workers;
  return theorem_re_experiment(ensemble, sigma, cone, config);
}

TrialReport run_rudelson(const json& params, std::uint64_t seed) {
  SymMatrix sigma = matrix_from_json(require(params, "sigma", "params"));
  SymMatrix sigma_hat =
      matrix_from_json(require(params, "sigma_hat", "params"));
  ConeSpec cone = cone_from_json(require(params, "cone", "params"), sigma.dim());
  RudelsonReport r = rudelson_check(
      sigma_hat, sigma, cone, get_or(params, "eps", 0.1),
      get_or(params, "gamma", 0.1), get_or(params, "probes", 1000), seed);
  TrialReport report;
  report.experiment = "rudelson";
  report.params = params;
  report.extra = {{"precondition_met", r.precondition_met},
                  {"hypotheses_exhaustive", r.hypotheses_exhaustive},
                  {"d", r.d},
                  {"d_literal", r.d_literal},
                  {"re_population", r.re_population},
                  {"re_empirical", r.re_empirical},
                  {"re_conclusion", r.re_conclusion},
                  {"probe_violations", r.probe_violations},
                  {"min_margin", r.min_margin}};
  report.bound_value = (1.0 - get_or(params, "eps", 0.1)) * r.re_population;
  report.rows = {{0, r.re_empirical, report.bound_value, !r.re_conclusion}};
  report.aggregate();
  report.pass = r.ok;
  if (!r.precondition_met) {
    report.flagged = true;
    report.flag_reason = "hypotheses not satisfied by the supplied matrices";
  }
  return report;
}

TrialReport run_transfer(const json& params, std::uint64_t seed) {
  SymMatrix sigma = matrix_from_json(require(params, "sigma", "params"));
  SymMatrix sigma_hat =
      matrix_from_json(require(params, "sigma_hat", "params"));
  int d = require(params, "d", "params").get<int>();
  double eta = get_or(params, "eta", 0.1);
  Eigen::VectorXd diag_d =
      params.contains("D")
          ? vector_from_json(params.at("D"))
          : (sigma_hat.mat().diagonal() - (1.0 - eta) * sigma.mat().diagonal())
                .cwiseMax(0.0)
                .eval();
  TransferReport r =
      transfer_check(sigma_hat, sigma, eta, d, diag_d,
                     get_or(params, "probes", 10000), seed);
  TrialReport report;
  report.experiment = "transfer";
  report.params = params;
  report.extra = {{"premise_exhaustive", r.premise_exhaustive},
                  {"premise_holds", r.premise_holds},
                  {"premise_margin", r.premise_margin},
                  {"probes", r.probes},
                  {"violations", r.violations},
                  {"min_margin", r.min_margin}};
  report.rows = {{0, r.min_margin, 0.0, r.violations > 0}};
  report.aggregate();
  report.pass = r.ok;
  if (!r.premise_holds) {
    report.flagged = true;
    report.flag_reason = "sparse-minorization premise does not hold";
  }
  return report;
}

TrialReport run_lasso_rate(const json& params, std::uint64_t seed, int trials,
                           int workers) {
  EnsembleSpec ensemble =
      ensemble_from_json(require(params, "ensemble", "params"));
  LassoRateConfig config;
  config.s = require(params, "s", "params").get<int>();
  for (const auto& n : require(params, "n_grid", "params"))
    config.n_grid.push_back(n.get<int>());
  config.sigma_noise = get_or(params, "sigma_noise", 1.0);
  config.kappa = get_or(params, "kappa", 4.0);
  config.cone_alpha = get_or(params, "cone_alpha", 3.0);
  config.trials = trials;
  config.tol = get_or(params, "tol", 1e-7);
  config.max_iters = get_or(params, "max_iters", 100000);
  config.seed = seed;
  config.workers = workers;
  return lasso_rate_experiment(ensemble, config);
}

TrialReport run_verify_identities(std::uint64_t seed) {
  TrialReport report;
  report.experiment = "verify_identities";
  report.params = {{"seed", seed}};
  int idx = 0;
  auto record = [&](double discrepancy, double tol) {
    report.rows.push_back({idx++, discrepancy, tol, discrepancy > tol});
  };

  // Gaussian smoothing of quadratic forms: closed form vs Monte Carlo
  Rng rng = make_rng(seed, 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int inst = 0; inst < 20; ++inst) {
    const int p = 2 + inst % 3;
    Eigen::MatrixXd raw(p, p), raw_c(p, p);
    Eigen::VectorXd v(p);
    for (int i = 0; i < p; ++i) {
      v(i) = normal(rng);
      for (int j = 0; j < p; ++j) {
        raw(i, j) = normal(rng);
        raw_c(i, j) = normal(rng);
      }
    }
    SymMatrix b(Eigen::MatrixXd(raw + raw.transpose()));
    SymMatrix c(Eigen::MatrixXd(raw_c * raw_c.transpose()));
    GaussianMeasure mu(v, c);
    double exact = gaussian_smooth_quadratic(b, mu);
    Eigen::MatrixXd c_sqrt = psd_sqrt(c).mat();
    const int draws = 20000;
    double sum = 0, sum_sq = 0;
    for (int k = 0; k < draws; ++k) {
      Eigen::VectorXd g(p);
      for (int i = 0; i < p; ++i) g(i) = normal(rng);
      Eigen::VectorXd theta = v + c_sqrt * g;
      double q = b.quad(theta);
      sum += q;
      sum_sq += q * q;
    }
    double mean = sum / draws;
    double se = std::sqrt(
        std::max(0.0, sum_sq / draws - mean * mean) / draws);
    record(std::abs(mean - exact), 5.0 * se + 1e-12);
  }

  // KL formula values: 0, 0.5 and 2
  {
    SymMatrix eye = SymMatrix::Identity(3);
    record(std::abs(gaussian_kl(Eigen::VectorXd::Zero(3), eye)), 1e-12);
    Eigen::VectorXd unit = Eigen::VectorXd::Unit(3, 0);
    record(std::abs(gaussian_kl(unit, eye) - 0.5), 1e-12);
    record(std::abs(gaussian_kl(2.0 * unit, eye) - 2.0), 1e-12);
  }

  // variational inequality on random discrete instances
  {
    Rng vrng = make_rng(seed, 2);
    std::uniform_real_distribution<double> unif(0.01, 1.0);
    std::normal_distribution<double> vnormal(0.0, 2.0);
    int failures = 0;
    for (int inst = 0; inst < 1000; ++inst) {
      const int k = 2 + inst % 6;
      Eigen::VectorXd h(k), mu0(k), mu1(k);
      for (int i = 0; i < k; ++i) {
        h(i) = vnormal(vrng);
        mu0(i) = unif(vrng);
        mu1(i) = unif(vrng);
      }
      mu0 /= mu0.sum();
      mu1 /= mu1.sum();
      if (!variational_check(h, mu0, mu1).holds) ++failures;
    }
    record(static_cast<double>(failures), 0.0);
  }

  // BDG moment inequality at q in {2,3}
  for (double q : {2.0, 3.0}) {
    for (const ScalarDist& w :
         {ScalarDist::Exponential(1.0), ScalarDist::Gaussian(1.0)}) {
      BdgReport b = bdg_moment_check(w, q, 50, 20000, mix_seed(seed, 3));
      record(b.holds ? 0.0 : b.lhs - b.rhs, 0.0);
    }
  }

  report.aggregate();
  report.pass = report.violations == 0;
  return report;
}

TrialReport run_concentration(const json& params, std::uint64_t seed,
                              int trials) {
  std::string check = require(params, "check", "params").get<std::string>();
  TrialReport report;
  report.experiment = "concentration";
  report.params = params;
  FrequencyReport freq;
  if (check == "nonneg") {
    freq = nonneg_lowertail_check(
        dist_from_json(require(params, "dist", "params")),
        require(params, "n", "params").get<int>(), get_or(params, "t", 2.0),
        trials, seed);
  } else if (check == "supermartingale") {
    freq = supermartingale_tail_check(
        gaussian_walk(require(params, "n", "params").get<int>(),
                      get_or(params, "step_sd", 1.0)),
        get_or(params, "xi", 0.5), get_or(params, "t", 2.0), trials, seed);
  } else if (check == "bdg") {
    BdgReport b = bdg_moment_check(
        dist_from_json(require(params, "dist", "params")),
        get_or(params, "q", 2.0), require(params, "n", "params").get<int>(),
        trials, seed);
    report.rows = {{0, b.lhs, b.rhs, !b.holds}};
    report.aggregate();
    report.bound_value = b.rhs;
    report.extra = {{"lhs", b.lhs}, {"lhs_se", b.lhs_se}, {"rhs", b.rhs}};
    report.pass = b.holds;
    return report;
  } else {
    throw InputError("config: unknown concentration check '" + check + "'");
  }
  report.trials = freq.trials;
  report.violations = freq.hits;
  report.frequency = freq.frequency;
  auto [lo, hi] = wilson_interval(freq.hits, freq.trials);
  report.wilson_low = lo;
  report.wilson_high = hi;
  report.bound_value = freq.bound;
  report.extra = {{"check", freq.check}, {"se", freq.se}};
  report.pass = freq.pass;
  return report;
}

}  // namespace

ScalarDist dist_from_json(const json& j) {
  std::string type = require(j, "type", "dist").get<std::string>();
  if (type == "constant")
    return ScalarDist::Constant(require(j, "value", "dist").get<double>());
  if (type == "gaussian") return ScalarDist::Gaussian(get_or(j, "sd", 1.0));
  if (type == "rademacher") return ScalarDist::Rademacher();
  if (type == "two_point")
    return ScalarDist::TwoPoint(require(j, "a", "dist").get<double>(),
                                require(j, "b", "dist").get<double>(),
                                require(j, "prob", "dist").get<double>());
  if (type == "uniform")
    return ScalarDist::Uniform(require(j, "a", "dist").get<double>(),
                               require(j, "b", "dist").get<double>());
  if (type == "exponential")
    return ScalarDist::Exponential(get_or(j, "rate", 1.0));
  if (type == "student_t")
    return ScalarDist::StudentT(require(j, "df", "dist").get<double>());
  throw InputError("config: unknown distribution type '" + type + "'");
}

EnsembleSpec ensemble_from_json(const json& j) {
  std::string type = require(j, "type", "ensemble").get<std::string>();
  if (type == "gaussian")
    return EnsembleSpec::Gaussian(
        matrix_from_json(require(j, "sigma", "ensemble")));
  if (type == "independent") {
    std::vector<ScalarDist> coords;
    for (const auto& c : require(j, "coords", "ensemble"))
      coords.push_back(dist_from_json(c));
    return EnsembleSpec::IndependentCoords(std::move(coords));
  }
  if (type == "scalar_mixed")
    return EnsembleSpec::ScalarMixed(
        ensemble_from_json(require(j, "base", "ensemble")),
        dist_from_json(require(j, "mixer", "ensemble")));
  if (type == "fourwise")
    return EnsembleSpec::FourwiseRademacher(
        require(j, "p", "ensemble").get<int>());
  if (type == "affine") {
    const json& a = require(j, "a", "ensemble");
    Eigen::MatrixXd amat(a.size(), a.at(0).size());
    for (size_t r = 0; r < a.size(); ++r)
      for (size_t c = 0; c < a.at(r).size(); ++c)
        amat(r, c) = a.at(r).at(c).get<double>();
    return EnsembleSpec::Affine(
        ensemble_from_json(require(j, "base", "ensemble")), amat,
        vector_from_json(require(j, "b", "ensemble")));
  }
  throw InputError("config: unknown ensemble type '" + type + "'");
}

SymMatrix matrix_from_json(const json& j) {
  if (j.is_object()) {
    if (j.contains("identity")) {
      int p = j.at("identity").get<int>();
      if (j.contains("scale"))
        return SymMatrix(j.at("scale").get<double>() *
                         SymMatrix::Identity(p).mat());
      return SymMatrix::Identity(p);
    }
    if (j.contains("diagonal"))
      return SymMatrix::Diagonal(vector_from_json(j.at("diagonal")));
    throw InputError("config: matrix object needs 'identity' or 'diagonal'");
  }
  if (!j.is_array() || j.empty())
    throw InputError("config: matrix must be a nonempty 2-D array");
  const int p = static_cast<int>(j.size());
  Eigen::MatrixXd m(p, p);
  for (int r = 0; r < p; ++r) {
    if (static_cast<int>(j.at(r).size()) != p)
      throw InputError("config: matrix rows must have equal length");
    for (int c = 0; c < p; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return SymMatrix(m);
}

void apply_overrides(json& config, const std::vector<std::string>& overrides) {
  for (const std::string& entry : overrides) {
    auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw InputError("override must look like key=value: " + entry);
    std::string path = entry.substr(0, eq);
    std::string raw = entry.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::parse_error&) {
      value = raw;  // bare strings stay strings
    }
    json* node = &config;
    size_t start = 0;
    while (true) {
      size_t dot = path.find('.', start);
      std::string key = path.substr(start, dot - start);
      if (key.empty()) throw InputError("override has an empty path segment");
      if (dot == std::string::npos) {
        (*node)[key] = value;
        break;
      }
      node = &(*node)[key];
      start = dot + 1;
    }
  }
}

TrialReport run(const json& config) {
  std::string experiment =
      require(config, "experiment", "config").get<std::string>();
  std::uint64_t seed =
      config.contains("master_seed")
          ? config.at("master_seed").get<std::uint64_t>()
          : 0;
  int trials = get_or(config, "trials", 100);
  if (trials < 1) throw InputError("config: trials must be >= 1");
  int workers = workers_from_json(config);
  json params = config.contains("params") ? config.at("params") : json::object();

  if (experiment == "lowertail")
    return run_lowertail(params, seed, trials, workers);
  if (experiment == "ols") return run_ols(params, seed, trials, workers);
  if (experiment == "vector_sum")
    return run_vector_sum(params, seed, trials, workers);
  if (experiment == "re") return run_re(params, seed, trials, workers);
  if (experiment == "rudelson") return run_rudelson(params, seed);
  if (experiment == "transfer") return run_transfer(params, seed);
  if (experiment == "lasso_rate")
    return run_lasso_rate(params, seed, trials, workers);
  if (experiment == "verify_identities") return run_verify_identities(seed);
  if (experiment == "concentration")
    return run_concentration(params, seed, trials);
  throw InputError("config: unknown experiment '" + experiment + "'");
}

TrialReport run_and_emit(const json& config) {
  TrialReport report = run(config);
  if (config.contains("output")) {
    std::string prefix = config.at("output").get<std::string>();
    write_report_json(report, prefix + ".json");
    write_report_csv(report, prefix + ".csv");
  }
  return report;
}

}  // namespace covtail
