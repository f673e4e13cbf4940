#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>

namespace covtail {

/// Dense symmetric real matrix. Construction mirrors the lower triangle
/// into the upper one, so symmetry holds to the bit.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix Identity(int p);
  static SymMatrix Zero(int p);
  static SymMatrix Diagonal(const Eigen::VectorXd& d);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& mat() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }
  double trace() const { return m_.trace(); }
  Eigen::VectorXd diagonal() const { return m_.diagonal(); }

  double quad(const Eigen::VectorXd& v) const { return v.dot(m_ * v); }

 private:
  Eigen::MatrixXd m_;
};

struct EigenDecomposition {
  Eigen::VectorXd eigenvalues;   // descending
  Eigen::MatrixXd eigenvectors;  // columns match eigenvalues
};

/// Full eigendecomposition A = V diag(lambda) V^T, eigenvalues descending.
EigenDecomposition sym_eigendecomposition(const SymMatrix& a);

/// (lambda_max, lambda_min). For PSD A, lambda_max is the operator norm;
/// for invertible A, 1/lambda_min is the norm of the inverse.
std::pair<double, double> op_norm_and_min_eig(const SymMatrix& a);

inline constexpr double kDefaultRankTol = 1e-12;
inline constexpr double kPsdTol = 1e-10;

/// Sigma^{-1/2}: eigenvalues above rank_tol * lambda_max inverted under the
/// square root, degenerate directions annihilated. Throws NotPsdError on a
/// genuinely negative eigenvalue.
SymMatrix psd_sqrt_pseudoinverse(const SymMatrix& a,
                                 double rank_tol = kDefaultRankTol);

/// PSD square root with the same rank-tolerance convention.
SymMatrix psd_sqrt(const SymMatrix& a, double rank_tol = kDefaultRankTol);

/// Moore-Penrose pseudoinverse of a PSD matrix.
SymMatrix psd_pseudoinverse(const SymMatrix& a,
                            double rank_tol = kDefaultRankTol);

/// Orthogonal projector onto range(A) for PSD A.
SymMatrix range_projector(const SymMatrix& a,
                          double rank_tol = kDefaultRankTol);

/// Matrix CSV: p rows of p comma-separated numbers. Loading averages
/// mirrored entries and rejects asymmetry above 1e-8 relative.
SymMatrix load_sym_csv(const std::string& path);
void save_sym_csv(const SymMatrix& a, const std::string& path);

}  // namespace covtail
