#include "covtail/sparse_re.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <limits>
#include <cmath>
#include <numeric>

#include "covtail/errors.hpp"
#include "covtail/lowertail.hpp"
#include "covtail/parallel.hpp"

namespace covtail {

namespace {

// number of size-k subsets, saturating at limit+1
long binomial_capped(int p, int k, long limit) {
  double c = 1.0;
  for (int i = 0; i < k; ++i) {
    c *= static_cast<double>(p - i) / (i + 1);
    if (c > static_cast<double>(limit) + 1) return limit + 1;
  }
  return static_cast<long>(std::llround(c));
}

// Euclidean projection of y onto the l1 ball of radius r (Duchi et al.)
Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& y, double r) {
  if (r <= 0) return Eigen::VectorXd::Zero(y.size());
  if (y.cwiseAbs().sum() <= r) return y;
  Eigen::VectorXd u = y.cwiseAbs();
  std::sort(u.data(), u.data() + u.size(), std::greater<double>());
  double cssv = 0.0;
  double theta = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    cssv += u(i);
    double t = (cssv - r) / (i + 1);
    if (i + 1 == u.size() || u(i + 1) <= t) {
      theta = t;
      break;
    }
  }
  Eigen::VectorXd out(y.size());
  for (int i = 0; i < y.size(); ++i) {
    double mag = std::max(0.0, std::abs(y(i)) - theta);
    out(i) = y(i) >= 0 ? mag : -mag;
  }
  return out;
}

std::vector<int> complement_of(const std::vector<int>& support, int p) {
  std::vector<char> in(p, 0);
  for (int j : support) in[j] = 1;
  std::vector<int> out;
  for (int j = 0; j < p; ++j)
    if (!in[j]) out.push_back(j);
  return out;
}

// project v onto {|v_S|_2 = 1} x {|v_{S^c}|_1 <= alpha |v_S|_1}, in place
void project_cone_sphere(Eigen::VectorXd& v, const ConeSpec& cone,
                         const std::vector<int>& comp) {
  double s_norm = 0.0;
  for (int j : cone.support) s_norm += v(j) * v(j);
  s_norm = std::sqrt(s_norm);
  if (s_norm < 1e-14) {
    // degenerate support block: restart it on the first coordinate
    v(cone.support[0]) = 1.0;
    s_norm = 1.0;
  }
  for (int j : cone.support) v(j) /= s_norm;
  for (int j : comp) v(j) /= s_norm;
  double s_l1 = 0.0;
  for (int j : cone.support) s_l1 += std::abs(v(j));
  Eigen::VectorXd off(static_cast<int>(comp.size()));
  for (size_t k = 0; k < comp.size(); ++k) off(k) = v(comp[k]);
  off = project_l1_ball(off, cone.alpha * s_l1);
  for (size_t k = 0; k < comp.size(); ++k) v(comp[k]) = off(k);
}

// deterministic sign convention: first nonzero entry positive
void canonicalize_sign(Eigen::VectorXd& v) {
  for (int j = 0; j < v.size(); ++j) {
    if (std::abs(v(j)) > 1e-14) {
      if (v(j) < 0) v = -v;
      return;
    }
  }
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (int j = 0; j < a.size(); ++j) {
    if (a(j) != b(j)) return a(j) < b(j);
  }
  return false;
}

SymMatrix principal_submatrix(const SymMatrix& a,
                              const std::vector<int>& idx) {
  const int k = static_cast<int>(idx.size());
  Eigen::MatrixXd sub(k, k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) sub(r, c) = a.mat()(idx[r], idx[c]);
  return SymMatrix(sub);
}

// min over the given supports of lambda_min(pencil restricted to the support)
double min_pencil_eigenvalue(const SymMatrix& pencil,
                             const std::vector<std::vector<int>>& supports) {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& t : supports)
    worst = std::min(worst,
                     op_norm_and_min_eig(principal_submatrix(pencil, t)).second);
  return worst;
}

std::vector<std::vector<int>> sampled_subsets(int p, int k, int count,
                                              Rng& rng) {
  std::vector<int> all(p);
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::vector<int>> out;
  for (int i = 0; i < count; ++i) {
    std::shuffle(all.begin(), all.end(), rng);
    std::vector<int> t(all.begin(), all.begin() + k);
    std::sort(t.begin(), t.end());
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

ConeSpec::ConeSpec(std::vector<int> support_, double alpha_, int p)
    : support(std::move(support_)), alpha(alpha_) {
  if (support.empty()) throw InputError("ConeSpec: support must be nonempty");
  if (!(alpha > 0)) throw InputError("ConeSpec: alpha must be > 0");
  std::sort(support.begin(), support.end());
  for (size_t k = 0; k < support.size(); ++k) {
    if (support[k] < 0 || support[k] >= p)
      throw InputError("ConeSpec: support index out of range");
    if (k > 0 && support[k] == support[k - 1])
      throw InputError("ConeSpec: duplicate support index");
  }
}

double ConeSpec::alpha_tilde(double eps) const {
  if (!(eps >= 0 && eps < 1))
    throw InputError("ConeSpec::alpha_tilde: eps must be in [0,1)");
  return alpha * std::sqrt((1.0 + eps) / (1.0 - eps));
}

bool cone_membership(const Eigen::VectorXd& v, const ConeSpec& cone) {
  std::vector<char> in(v.size(), 0);
  for (int j : cone.support) {
    if (j >= v.size()) throw InputError("cone_membership: dimension mismatch");
    in[j] = 1;
  }
  double on = 0.0, off = 0.0;
  for (int j = 0; j < v.size(); ++j) (in[j] ? on : off) += std::abs(v(j));
  return off <= cone.alpha * on + 1e-12 * (on + off);
}

Eigen::VectorXd random_cone_point(const ConeSpec& cone, int p, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(p);
  double s_sq = 0.0;
  for (int j : cone.support) {
    v(j) = normal(rng);
    s_sq += v(j) * v(j);
  }
  double s_norm = std::sqrt(std::max(s_sq, 1e-300));
  double s_l1 = 0.0;
  for (int j : cone.support) {
    v(j) /= s_norm;
    s_l1 += std::abs(v(j));
  }
  std::vector<int> comp = complement_of(cone.support, p);
  if (!comp.empty()) {
    double off_l1 = 0.0;
    std::vector<double> raw(comp.size());
    for (size_t k = 0; k < comp.size(); ++k) {
      raw[k] = normal(rng);
      off_l1 += std::abs(raw[k]);
    }
    double budget = unif(rng) * cone.alpha * s_l1;
    if (off_l1 > 1e-300)
      for (size_t k = 0; k < comp.size(); ++k)
        v(comp[k]) = raw[k] * budget / off_l1;
  }
  return v;
}

// Minimizer of y'My / y'Gy over y with y'Gy > 0, for PSD M and PSD
// (possibly singular) G.  Null directions of G are eliminated through the
// Schur complement, leaving a symmetric eigenproblem.
std::optional<Eigen::VectorXd> pencil_min_direction(const Eigen::MatrixXd& m,
                                                    const Eigen::MatrixXd& g) {
  const int k = static_cast<int>(m.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ge(g);
  const double gmax = ge.eigenvalues().maxCoeff();
  if (!(gmax > 0)) return std::nullopt;
  std::vector<int> range_idx, null_idx;
  for (int i = 0; i < k; ++i)
    (ge.eigenvalues()(i) > 1e-12 * gmax ? range_idx : null_idx).push_back(i);
  const int nr = static_cast<int>(range_idx.size());
  const int nn = static_cast<int>(null_idx.size());
  Eigen::MatrixXd ur(k, nr), un(k, nn);
  Eigen::VectorXd dr(nr);
  for (int i = 0; i < nr; ++i) {
    ur.col(i) = ge.eigenvectors().col(range_idx[i]);
    dr(i) = ge.eigenvalues()(range_idx[i]);
  }
  for (int i = 0; i < nn; ++i) un.col(i) = ge.eigenvectors().col(null_idx[i]);

  Eigen::MatrixXd schur = ur.transpose() * m * ur;
  Eigen::MatrixXd null_map;  // maps the range part to the optimal null part
  if (nn > 0) {
    Eigen::MatrixXd mnn = un.transpose() * m * un;
    Eigen::MatrixXd mnr = un.transpose() * m * ur;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> me(mnn);
    const double mmax = std::max(me.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
    Eigen::VectorXd inv = me.eigenvalues();
    for (int i = 0; i < nn; ++i)
      inv(i) = inv(i) > 1e-12 * mmax ? 1.0 / inv(i) : 0.0;
    Eigen::MatrixXd pinv = me.eigenvectors() * inv.asDiagonal() *
                           me.eigenvectors().transpose();
    schur -= mnr.transpose() * pinv * mnr;
    null_map = -pinv * mnr;
  }
  Eigen::VectorXd dhalf = dr.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd w = dhalf.asDiagonal() * schur * dhalf.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> we(
      Eigen::MatrixXd(0.5 * (w + w.transpose())));
  Eigen::VectorXd yr = dhalf.asDiagonal() * we.eigenvectors().col(0);
  Eigen::VectorXd y = ur * yr;
  if (nn > 0) y += un * (null_map * yr);
  return y;
}

// Exact refinement on the face the iterate has settled on.  With the sign
// pattern and zero set fixed, and the l1 constraint either slack or tight,
// the minimizer solves a pencil problem on a linear subspace, so each
// round is computed in closed form.
void polish_on_face(const SymMatrix& a, const ConeSpec& cone,
                    const std::vector<int>& comp, Eigen::VectorXd& v,
                    double& obj) {
  const int p = a.dim();
  std::vector<char> in_support(p, 0);
  for (int j : cone.support) in_support[j] = 1;
  for (int round = 0; round < 30; ++round) {
    const double vmax = v.cwiseAbs().maxCoeff();
    if (!(vmax > 0)) return;
    std::vector<int> free_coords;
    for (int j = 0; j < p; ++j)
      if (std::abs(v(j)) > 1e-9 * vmax) free_coords.push_back(j);
    const int k = static_cast<int>(free_coords.size());
    if (k == 0) return;
    double s1 = 0, off1 = 0;
    for (int j : cone.support) s1 += std::abs(v(j));
    for (int j : comp) off1 += std::abs(v(j));
    const bool active = off1 >= cone.alpha * s1 * (1.0 - 1e-7);

    Eigen::MatrixXd basis;
    if (active && k > 1) {
      // face normal in the free coordinates; its null space is the face
      Eigen::VectorXd c(k);
      for (int i = 0; i < k; ++i) {
        const int j = free_coords[i];
        const double sgn = v(j) > 0 ? 1.0 : -1.0;
        c(i) = in_support[j] ? -cone.alpha * sgn : sgn;
      }
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
      Eigen::MatrixXd q = qr.householderQ();
      basis = Eigen::MatrixXd::Zero(p, k - 1);
      for (int col = 1; col < k; ++col)
        for (int i = 0; i < k; ++i) basis(free_coords[i], col - 1) = q(i, col);
    } else {
      basis = Eigen::MatrixXd::Zero(p, k);
      for (int i = 0; i < k; ++i) basis(free_coords[i], i) = 1.0;
    }
    if (basis.cols() == 0) return;
    Eigen::MatrixXd m = basis.transpose() * a.mat() * basis;
    Eigen::MatrixXd g =
        Eigen::MatrixXd::Zero(basis.cols(), basis.cols());
    for (int j : cone.support)
      g += basis.row(j).transpose() * basis.row(j);
    auto direction = pencil_min_direction(m, g);
    if (!direction) return;
    Eigen::VectorXd cand = basis * *direction;
    project_cone_sphere(cand, cone, comp);
    const double cand_obj = a.quad(cand);
    if (!(cand_obj < obj - 1e-15 * (1.0 + obj))) return;
    v = cand;
    obj = cand_obj;
  }
}

REResult restricted_eigenvalue(const SymMatrix& a, const ConeSpec& cone,
                               int restarts, std::uint64_t seed) {
  const int p = a.dim();
  for (int j : cone.support)
    if (j >= p) throw InputError("restricted_eigenvalue: support out of range");
  if (restarts < 1)
    throw InputError("restricted_eigenvalue: restarts must be >= 1");
  auto [a_norm, a_min] = op_norm_and_min_eig(a);
  if (a_min < -kPsdTol * std::max(a_norm, 0.0))
    throw NotPsdError("restricted_eigenvalue: matrix is not PSD");
  const double lower_bracket = std::sqrt(std::max(0.0, a_min));
  const std::vector<int> comp = complement_of(cone.support, p);

  REResult best;
  best.value = std::numeric_limits<double>::infinity();
  auto eig = sym_eigendecomposition(a);
  const double step0 = a_norm > 0 ? 0.45 / a_norm : 1.0;

  auto descend = [&](Eigen::VectorXd& v, int iters) {
    double obj = a.quad(v);
    double step = step0;
    for (int it = 0; it < iters; ++it) {
      Eigen::VectorXd grad = 2.0 * (a.mat() * v);
      Eigen::VectorXd cand = v - step * grad;
      project_cone_sphere(cand, cone, comp);
      double cand_obj = a.quad(cand);
      if (cand_obj <= obj) {
        double moved = (cand - v).squaredNorm();
        v = cand;
        if (obj - cand_obj < 1e-15 * (1.0 + obj) && moved < 1e-20) break;
        obj = cand_obj;
        step = std::min(step * 1.2, step0 * 4.0);
      } else {
        step *= 0.5;
        if (step < 1e-14 * step0) break;
      }
    }
    polish_on_face(a, cone, comp, v, obj);
    return obj;
  };

  for (int r = 0; r < restarts; ++r) {
    Rng rng = make_rng(seed, r);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd v;
    switch (r % 4) {
      case 0: {  // support only
        v = Eigen::VectorXd::Zero(p);
        for (int j : cone.support) v(j) = normal(rng);
        break;
      }
      case 1:  // interior cone point
        v = random_cone_point(cone, p, rng);
        break;
      case 2:  // bottom eigenvector, pushed into the cone
        v = eig.eigenvectors.col(p - 1 - (r / 4) % p);
        break;
      default: {  // full Gaussian
        v.resize(p);
        for (int j = 0; j < p; ++j) v(j) = normal(rng);
        break;
      }
    }
    project_cone_sphere(v, cone, comp);

    double obj = descend(v, 2000);
    double value = std::sqrt(std::max(0.0, obj));
    canonicalize_sign(v);
    if (value < best.value - 1e-15 ||
        (std::abs(value - best.value) <= 1e-15 &&
         (best.minimizer.size() == 0 || lex_less(v, best.minimizer)))) {
      best.value = value;
      best.minimizer = v;
    }
  }

  // basin hopping around the incumbent to escape face-local minima
  {
    Rng rng = make_rng(seed, 0xB0B0ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scales[3] = {0.5, 0.2, 0.05};
    double best_obj = best.value * best.value;
    for (int hop = 0; hop < 60; ++hop) {
      Eigen::VectorXd v = best.minimizer;
      const double scale = scales[hop % 3];
      for (int j = 0; j < p; ++j) v(j) += scale * normal(rng);
      project_cone_sphere(v, cone, comp);
      double obj = descend(v, 600);
      if (obj < best_obj * (1.0 - 1e-12)) {
        best_obj = obj;
        canonicalize_sign(v);
        best.value = std::sqrt(std::max(0.0, obj));
        best.minimizer = v;
      }
    }
  }
  best.restarts_used = restarts;
  best.certificate_gap = best.value - lower_bracket;
  return best;
}

std::pair<REResult, std::vector<int>> restricted_eigenvalue_all(
    const SymMatrix& a, int s, double alpha, int restarts,
    std::uint64_t seed) {
  const int p = a.dim();
  if (s < 1 || s > p)
    throw InputError("restricted_eigenvalue_all: s out of range");
  auto supports = all_subsets(p, s);
  REResult best;
  best.value = std::numeric_limits<double>::infinity();
  std::vector<int> best_support;
  for (size_t k = 0; k < supports.size(); ++k) {
    ConeSpec cone(supports[k], alpha, p);
    REResult r = restricted_eigenvalue(a, cone, restarts,
                                       mix_seed(seed, k));
    if (r.value < best.value) {
      best = r;
      best_support = supports[k];
    }
  }
  return {best, best_support};
}

std::vector<std::vector<int>> all_subsets(int p, int k, long limit) {
  if (k < 0 || k > p) throw InputError("all_subsets: k out of range");
  if (binomial_capped(p, k, limit) > limit)
    throw InputError("all_subsets: combinatorial budget exceeded");
  std::vector<std::vector<int>> out;
  std::vector<int> cur(k);
  std::iota(cur.begin(), cur.end(), 0);
  while (true) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[i] == p - k + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

TransferReport transfer_check(const SymMatrix& sigma_hat,
                              const SymMatrix& sigma, double eta, int d,
                              const Eigen::VectorXd& diag_d, int probes,
                              std::uint64_t seed) {
  const int p = sigma.dim();
  if (sigma_hat.dim() != p || diag_d.size() != p)
    throw InputError("transfer_check: dimension mismatch");
  if (!(eta >= 0 && eta < 1))
    throw InputError("transfer_check: eta must be in [0,1)");
  if (d < 2) throw InputError("transfer_check: d must be >= 2");

  const double scale =
      op_norm_and_min_eig(sigma_hat).first + op_norm_and_min_eig(sigma).first;
  for (int j = 0; j < p; ++j) {
    if (diag_d(j) < -1e-12 * (1.0 + scale))
      throw InputError("transfer_check: D must be nonnegative");
    double required = sigma_hat.mat()(j, j) - (1.0 - eta) * sigma.mat()(j, j);
    if (diag_d(j) < required - 1e-12 * (1.0 + scale))
      throw InputError(
          "transfer_check: D[j,j] below Sigma_hat[j,j] - (1-eta) Sigma[j,j]");
  }

  TransferReport report;
  SymMatrix pencil(sigma_hat.mat() - (1.0 - eta) * sigma.mat());
  const int dd = std::min(d, p);
  if (binomial_capped(p, dd, 100000) <= 100000) {
    report.premise_exhaustive = true;
    report.premise_margin = min_pencil_eigenvalue(pencil, all_subsets(p, dd));
  } else {
    Rng rng = make_rng(seed, 0x5A5);
    report.premise_margin =
        min_pencil_eigenvalue(pencil, sampled_subsets(p, dd, 10000, rng));
  }
  report.premise_holds = report.premise_margin >= -1e-10 * (1.0 + scale);

  Rng rng = make_rng(seed, 0x5A6);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, p - 1);
  Eigen::VectorXd sqrt_diag = diag_d.cwiseMax(0.0).cwiseSqrt();
  report.probes = probes;
  report.min_margin = std::numeric_limits<double>::infinity();
  for (int t = 0; t < probes; ++t) {
    Eigen::VectorXd x(p);
    switch (t % 3) {
      case 0:  // dense Gaussian
        for (int j = 0; j < p; ++j) x(j) = normal(rng);
        break;
      case 1: {  // sparse
        x.setZero();
        int k = 1 + static_cast<int>(rng() % static_cast<unsigned>(
                                               std::min(2 * d, p)));
        for (int i = 0; i < k; ++i) x(pick(rng)) = normal(rng);
        break;
      }
      default: {  // cone-structured
        int s0 = 1 + static_cast<int>(rng() % 3u);
        std::vector<int> sup;
        while (static_cast<int>(sup.size()) < std::min(s0, p)) {
          int j = pick(rng);
          if (std::find(sup.begin(), sup.end(), j) == sup.end())
            sup.push_back(j);
        }
        x = random_cone_point(ConeSpec(sup, 3.0, p), p, rng);
        break;
      }
    }
    double lhs = sigma_hat.quad(x);
    double l1 = (sqrt_diag.array() * x.array().abs()).sum();
    double rhs = (1.0 - eta) * sigma.quad(x) - l1 * l1 / (d - 1);
    double margin = lhs - rhs;
    report.min_margin = std::min(report.min_margin, margin);
    if (margin < -1e-8 * (1.0 + std::abs(lhs) + std::abs(rhs))) {
      ++report.violations;
      if (report.witnesses.size() < 5) report.witnesses.push_back(x);
    }
  }
  report.ok = report.premise_holds && report.violations == 0;
  return report;
}

NormalizedDesign normalize_design(const SymMatrix& sigma_hat) {
  const int p = sigma_hat.dim();
  Eigen::VectorXd diag = sigma_hat.mat().diagonal();
  Eigen::VectorXd inv_sqrt(p);
  for (int j = 0; j < p; ++j)
    inv_sqrt(j) = diag(j) > 0 ? 1.0 / std::sqrt(diag(j)) : 0.0;
  Eigen::MatrixXd normalized =
      inv_sqrt.asDiagonal() * sigma_hat.mat() * inv_sqrt.asDiagonal();
  // pin the unit/zero diagonal exactly
  for (int j = 0; j < p; ++j) normalized(j, j) = diag(j) > 0 ? 1.0 : 0.0;
  return {SymMatrix(normalized), diag};
}

TrialReport theorem_re_experiment(const EnsembleSpec& ensemble,
                                  const SymMatrix& sigma, const ConeSpec& cone,
                                  const TheoremReConfig& config) {
  auto t_start = std::chrono::steady_clock::now();
  const int p = sigma.dim();
  if (ensemble.dim() != p)
    throw InputError("theorem_re_experiment: ensemble/sigma dimension mismatch");
  if (!(config.eps > 0 && config.eps < 0.5) ||
      !(config.delta > 0 && config.delta < 0.5))
    throw InputError("theorem_re_experiment: eps, delta must be in (0,1/2)");
  if (config.n < 1 || config.trials < 1)
    throw InputError("theorem_re_experiment: n and trials must be >= 1");

  const double eps = config.eps;
  const double alpha = cone.alpha;
  const double alpha_tilde = cone.alpha_tilde(eps);
  const int s = cone.s();

  NormalizedDesign pop = normalize_design(sigma);
  ConeSpec cone_tilde(cone.support, alpha_tilde, p);
  REResult re_pop = restricted_eigenvalue(pop.normalized, cone_tilde, 32,
                                          mix_seed(config.seed, 0x9E0));

  TrialReport report;
  report.experiment = "re";
  report.params = {{"p", p},          {"n", config.n},
                   {"eps", eps},      {"delta", config.delta},
                   {"q", config.q},   {"h", config.h},
                   {"h_star", config.h_star},
                   {"alpha", alpha},  {"alpha_tilde", alpha_tilde},
                   {"s", s},          {"trials", config.trials},
                   {"seed", config.seed},
                   {"ensemble", ensemble.name()}};
  report.extra["re_population"] = re_pop.value;

  if (re_pop.value <= 1e-9) {
    report.flagged = true;
    report.flag_reason = "re(X,S,alpha_tilde) = 0: theorem inapplicable";
    report.vacuous = true;
    return report;
  }

  const double big_c =
      784.0 * (1.0 + eps) * (1.0 + alpha) * (1.0 + alpha) * config.h * config.h;
  const double log_term = 1.0 + 2.0 * std::log(p / (4.0 * config.delta));
  const double n_req1 = big_c * log_term * s /
                        (re_pop.value * re_pop.value * std::pow(eps, 4));
  const double n_req2 = 4.0 * config.q * config.q *
                        std::pow(3.0, 2.0 / config.q) *
                        std::pow(s, 2.0 / config.q) /
                        std::pow(config.delta, 2.0 / config.q);
  const long n_req = static_cast<long>(std::ceil(std::max(n_req1, n_req2)));
  const long d_sparse = static_cast<long>(std::floor(
      eps * eps * config.n / (196.0 * config.h * config.h * log_term)));
  report.extra["n_required"] = n_req;
  report.extra["d_sparse"] = d_sparse;
  if (config.n < n_req) {
    report.flagged = true;
    report.flag_reason = "out of regime: n below the theorem's condition";
  }

  Eigen::VectorXd pop_sqrt = pop.diag.cwiseSqrt();
  const double re_floor = (1.0 - eps) * re_pop.value;
  report.bound_value = re_floor;
  report.rows.resize(config.trials);
  std::vector<std::array<int, 3>> failures(config.trials);
  parallel_for(config.trials, config.workers, [&](int trial) {
    SampleBatch batch =
        sample_batch(ensemble, config.n, mix_seed(config.seed, trial));
    SymMatrix sigma_hat = empirical_covariance(batch);
    NormalizedDesign emp = normalize_design(sigma_hat);
    Eigen::VectorXd emp_sqrt = emp.diag.cwiseSqrt();
    Eigen::VectorXd emp_inv_sqrt(p);
    for (int j = 0; j < p; ++j)
      emp_inv_sqrt(j) = emp.diag(j) > 0 ? 1.0 / emp_sqrt(j) : 0.0;

    // C1 and C2 on cone probes: u in C(S,alpha), x = D_hat^{-1/2} u
    Rng rng = make_rng(mix_seed(config.seed, trial), 0xC1C2);
    int c1_fail = 0, c2_fail = 0;
    for (int k = 0; k < config.probes; ++k) {
      Eigen::VectorXd u = random_cone_point(cone, p, rng);
      Eigen::VectorXd x = emp_inv_sqrt.asDiagonal() * u;
      Eigen::VectorXd pop_scaled = pop_sqrt.asDiagonal() * x;
      if (!cone_membership(pop_scaled, cone_tilde)) ++c1_fail;
      double lhs = sigma_hat.quad(x);
      double rhs = (1.0 - eps) * (1.0 - eps) * sigma.quad(x);
      if (lhs < rhs - 1e-10 * (1.0 + std::abs(rhs))) ++c2_fail;
    }

    // C3 via the restricted eigenvalue of the normalized empirical design
    REResult re_emp = restricted_eigenvalue(
        emp.normalized, cone, config.restarts, mix_seed(config.seed, trial));
    bool c3_fail = re_emp.value < re_floor - 1e-9 * (1.0 + re_floor);

    failures[trial] = {c1_fail, c2_fail, c3_fail ? 1 : 0};
    bool violated = c1_fail > 0 || c2_fail > 0 || c3_fail;
    report.rows[trial] = {trial, re_emp.value, re_floor, violated};
  });
  report.aggregate();

  int c1_total = 0, c2_total = 0, c3_total = 0;
  for (const auto& f : failures) {
    c1_total += f[0] > 0;
    c2_total += f[1] > 0;
    c3_total += f[2];
  }
  report.extra["c1_trials_failed"] = c1_total;
  report.extra["c2_trials_failed"] = c2_total;
  report.extra["c3_trials_failed"] = c3_total;

  double se = std::sqrt(report.frequency * (1.0 - report.frequency) /
                        config.trials);
  report.pass = report.frequency <= config.delta + 3.0 * se;

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

RudelsonReport rudelson_check(const SymMatrix& sigma_hat,
                              const SymMatrix& sigma, const ConeSpec& cone,
                              double eps, double gamma, int probes,
                              std::uint64_t seed) {
  const int p = sigma.dim();
  if (sigma_hat.dim() != p)
    throw InputError("rudelson_check: dimension mismatch");
  if (!(eps > 0 && eps < 0.5))
    throw InputError("rudelson_check: eps must be in (0,1/2)");
  if (gamma < 0) throw InputError("rudelson_check: gamma must be >= 0");

  RudelsonReport report;
  REResult re_pop =
      restricted_eigenvalue(sigma, cone, 32, mix_seed(seed, 0xA0));
  report.re_population = re_pop.value;
  if (re_pop.value <= 1e-9) return report;  // d undefined; precondition unmet

  const double max_diag = sigma.mat().diagonal().maxCoeff();
  const double base = 8.0 * (gamma + eps) * cone.s() * (1.0 + cone.alpha) *
                      (1.0 + cone.alpha) * max_diag /
                      (eps * re_pop.value * re_pop.value);
  report.d = static_cast<int>(std::min<double>(
      p, std::ceil(1.0 + base)));
  report.d_literal = static_cast<int>(std::min<double>(
      p, std::ceil(1.0 + base * re_pop.value)));

  const double scale =
      op_norm_and_min_eig(sigma_hat).first + op_norm_and_min_eig(sigma).first;

  // hypothesis: diagonal majorization
  for (int j = 0; j < p; ++j) {
    if (sigma_hat.mat()(j, j) >
        (1.0 + gamma) * sigma.mat()(j, j) + 1e-10 * (1.0 + scale))
      return report;
  }

  // hypothesis: minorization on d-sparse vectors
  SymMatrix pencil(sigma_hat.mat() - (1.0 - eps) * sigma.mat());
  double margin;
  const int d = report.d;
  if (binomial_capped(p, std::min(d, p), 100000) <= 100000) {
    report.hypotheses_exhaustive = true;
    margin = min_pencil_eigenvalue(pencil, all_subsets(p, std::min(d, p)));
  } else {
    Rng rng = make_rng(seed, 0xA1);
    margin = min_pencil_eigenvalue(
        pencil, sampled_subsets(p, std::min(d, p), 10000, rng));
  }
  if (margin < -1e-10 * (1.0 + scale)) return report;
  report.precondition_met = true;

  // conclusion on cone probes
  Rng rng = make_rng(seed, 0xA2);
  report.probes = probes;
  report.min_margin = std::numeric_limits<double>::infinity();
  for (int t = 0; t < probes; ++t) {
    Eigen::VectorXd x = random_cone_point(cone, p, rng);
    double lhs = sigma_hat.quad(x);
    double rhs = (1.0 - 1.5 * eps) * sigma.quad(x);
    double m = lhs - rhs;
    report.min_margin = std::min(report.min_margin, m);
    if (m < -1e-8 * (1.0 + std::abs(lhs) + std::abs(rhs))) {
      ++report.probe_violations;
      if (report.witnesses.size() < 5) report.witnesses.push_back(x);
    }
  }

  REResult re_emp =
      restricted_eigenvalue(sigma_hat, cone, 32, mix_seed(seed, 0xA3));
  report.re_empirical = re_emp.value;
  report.re_conclusion =
      re_emp.value >= (1.0 - eps) * re_pop.value - 1e-6 * (1.0 + re_pop.value);

  report.ok = report.precondition_met && report.re_conclusion &&
              report.probe_violations == 0;
  return report;
}

}  // namespace covtail
