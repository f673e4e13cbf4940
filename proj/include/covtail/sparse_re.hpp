#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "covtail/ensembles.hpp"
#include "covtail/report.hpp"
#include "covtail/seed.hpp"
#include "covtail/sym_matrix.hpp"

namespace covtail {

/// Support-and-aperture description of the cone
/// C(S,alpha) = { v : |v_{S^c}|_1 <= alpha |v_S|_1 }.
struct ConeSpec {
  std::vector<int> support;  // 0-based, strictly increasing
  double alpha;

  ConeSpec(std::vector<int> support_, double alpha_, int p);

  int s() const { return static_cast<int>(support.size()); }
  /// alpha sqrt((1+eps)/(1-eps)).
  double alpha_tilde(double eps) const;
};

bool cone_membership(const Eigen::VectorXd& v, const ConeSpec& cone);

struct REResult {
  double value = 0;
  Eigen::VectorXd minimizer;  // cone member with |v_S|_2 = 1
  double certificate_gap = 0;
  int restarts_used = 0;
};

/// re(A,S,alpha): the largest R with R^2 |v_S|_2^2 <= v^T A v on the cone,
/// found by multi-start projected penalty minimization. The minimizer
/// certifies the upper bracket; sqrt(lambda_min(A)) is the analytic lower
/// bracket.
REResult restricted_eigenvalue(const SymMatrix& a, const ConeSpec& cone,
                               int restarts = 32, std::uint64_t seed = 0);

/// re(A,s,alpha): exact minimum of re(A,S,alpha) over all size-s supports.
/// Throws if C(p,s) > 1e5.
std::pair<REResult, std::vector<int>> restricted_eigenvalue_all(
    const SymMatrix& a, int s, double alpha, int restarts = 32,
    std::uint64_t seed = 0);

struct TransferReport {
  bool premise_exhaustive = false;  // all size-d supports enumerated
  bool premise_holds = false;
  double premise_margin = 0;  // min over supports of lambda_min of the pencil
  int probes = 0;
  int violations = 0;
  double min_margin = 0;  // min over probes of lhs - rhs
  std::vector<Eigen::VectorXd> witnesses;
  bool ok = false;  // premise holds and no probe violated the conclusion
};

/// Checks the transfer principle: a minorization on d-sparse vectors implies
///   x^T Sigma_hat x >= (1-eta) x^T Sigma x - |D^{1/2}x|_1^2 / (d-1)
/// for every x. The d-sparse premise is verified exactly by principal
/// submatrix eigenvalues when C(p,d) <= 1e5, else on sampled supports.
TransferReport transfer_check(const SymMatrix& sigma_hat,
                              const SymMatrix& sigma, double eta, int d,
                              const Eigen::VectorXd& diag_d, int probes,
                              std::uint64_t seed);

struct NormalizedDesign {
  SymMatrix normalized;   // D^{-1/2} Sigma D^{-1/2}, zero rows where diag = 0
  Eigen::VectorXd diag;   // the diagonal of the input
};

NormalizedDesign normalize_design(const SymMatrix& sigma_hat);

struct TheoremReConfig {
  double eps = 0.1;
  double delta = 0.1;
  double q = 3.0;
  double h = 6.0;
  double h_star = 1.0;
  int n = 0;
  int trials = 100;
  int probes = 50;     // cone probes per trial for C1/C2
  int restarts = 8;    // optimizer restarts per trial for C3
  std::uint64_t seed = 0;
  int workers = 0;
};

/// Joint Monte Carlo check of events C1 (cone transfer under normalization),
/// C2 (quadratic minorization on the transferred cone) and C3 (restricted
/// eigenvalue inheritance for the normalized design).
TrialReport theorem_re_experiment(const EnsembleSpec& ensemble,
                                  const SymMatrix& sigma, const ConeSpec& cone,
                                  const TheoremReConfig& config);

struct RudelsonReport {
  bool precondition_met = false;  // both hypotheses verified
  bool hypotheses_exhaustive = false;
  int d = 0;
  int d_literal = 0;  // reading with the trailing re factor
  double re_population = 0;
  double re_empirical = 0;
  bool re_conclusion = false;  // re(Sigma_hat) >= (1-eps) re(Sigma)
  int probes = 0;
  int probe_violations = 0;  // x^T Sigma_hat x < (1-3eps/2) x^T Sigma x
  double min_margin = 0;
  std::vector<Eigen::VectorXd> witnesses;
  bool ok = false;
};

/// Checks the sparse-to-cone inheritance theorem: sparse minorization at
/// level d plus diagonal majorization imply the cone minorization with
/// factor (1-3eps/2) and re(Sigma_hat,S,alpha) >= (1-eps) re(Sigma,S,alpha).
RudelsonReport rudelson_check(const SymMatrix& sigma_hat,
                              const SymMatrix& sigma, const ConeSpec& cone,
                              double eps, double gamma, int probes,
                              std::uint64_t seed);

/// Enumerates all size-k subsets of {0..p-1}; throws if C(p,k) > limit.
std::vector<std::vector<int>> all_subsets(int p, int k,
                                          long limit = 100000);

/// Draws a uniform-ish random member of C(S,alpha) with |v_S|_2 = 1.
Eigen::VectorXd random_cone_point(const ConeSpec& cone, int p, Rng& rng);

}  // namespace covtail
