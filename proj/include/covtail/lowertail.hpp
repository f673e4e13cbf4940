#pragma once

#include <optional>

#include "covtail/ensembles.hpp"
#include "covtail/report.hpp"
#include "covtail/sym_matrix.hpp"

namespace covtail {

struct LowerTailBoundParams {
  int p = 0;
  long n = 0;
  double delta = 0;  // target failure probability, in (0,1)
  double h = 0;

  LowerTailBoundParams(int p_, long n_, double delta_, double h_);

  /// delta = 2 e^{-t} correspondence.
  double t() const;
};

/// (1/n) sum X_i X_i^T.
SymMatrix empirical_covariance(const SampleBatch& batch);

/// lambda_min of Sigma^{-1/2} Sigma_hat Sigma^{-1/2} restricted to
/// range(Sigma): the largest c with v^T Sigma_hat v >= c v^T Sigma v for
/// every v with v^T Sigma v > 0. Throws if Sigma_hat has mass outside
/// range(Sigma) beyond tolerance.
double relative_lower_eigenvalue(const SymMatrix& sigma_hat,
                                 const SymMatrix& sigma);

struct BoundValue {
  double value;
  bool vacuous;  // value <= 0: the bound says nothing
};

/// 1 - 7 h sqrt((p + 2 ln(2/delta)) / n).
BoundValue theorem_main_bound(const LowerTailBoundParams& params);

/// Trace truncation (1 ^ R/tr(B)) B; zero matrix maps to zero.
SymMatrix truncate_psd(const SymMatrix& b, double r);

struct LowerTailExperimentConfig {
  int n = 0;
  double delta = 0.1;
  /// Exact h when known; resolved from the ensemble (exact, else an
  /// empirical calibration flagged in the report) when absent.
  std::optional<double> h;
  int trials = 200;
  std::uint64_t seed = 0;
  int workers = 0;  // 0: resolve from env / hardware
  /// Truncation level for the trace-truncation sub-checks, as a multiple
  /// of h^2 p.
  double truncation_multiple = 4.0;
  int truncation_draws = 20000;
  int truncation_probes = 5;
};

/// Draws `trials` batches, measures the relative lower eigenvalue of each
/// empirical covariance against the closed-form bound, and also verifies
/// the trace-truncation estimates on whitened single-sample matrices.
TrialReport lowertail_experiment(const EnsembleSpec& ensemble,
                                 const SymMatrix& sigma,
                                 const LowerTailExperimentConfig& config);

}  // namespace covtail
