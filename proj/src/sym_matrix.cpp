#include "covtail/sym_matrix.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "covtail/errors.hpp"

namespace covtail {

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) {
    throw InputError("SymMatrix: matrix must be square, got " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  if (!m.allFinite()) {
    throw InputError("SymMatrix: non-finite entries");
  }
  m_ = m;
  // mirror the lower triangle so entries[i][j] == entries[j][i] exactly
  for (int i = 0; i < m_.rows(); ++i)
    for (int j = i + 1; j < m_.cols(); ++j) m_(i, j) = m_(j, i);
}

SymMatrix SymMatrix::Identity(int p) {
  return SymMatrix(Eigen::MatrixXd::Identity(p, p));
}

SymMatrix SymMatrix::Zero(int p) {
  return SymMatrix(Eigen::MatrixXd::Zero(p, p));
}

SymMatrix SymMatrix::Diagonal(const Eigen::VectorXd& d) {
  return SymMatrix(Eigen::MatrixXd(d.asDiagonal()));
}

EigenDecomposition sym_eigendecomposition(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.mat());
  if (solver.info() != Eigen::Success) {
    throw NumericError("sym_eigendecomposition: solver failed");
  }
  // Eigen returns ascending order; flip to descending.
  EigenDecomposition out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

std::pair<double, double> op_norm_and_min_eig(const SymMatrix& a) {
  auto eig = sym_eigendecomposition(a);
  int p = a.dim();
  return {eig.eigenvalues(0), eig.eigenvalues(p - 1)};
}

namespace {

enum class SpectralMap { SqrtPinv, Sqrt, Pinv, Projector };

SymMatrix spectral_transform(const SymMatrix& a, double rank_tol,
                             SpectralMap map) {
  auto eig = sym_eigendecomposition(a);
  const int p = a.dim();
  const double lmax = p > 0 ? eig.eigenvalues(0) : 0.0;
  if (lmax < 0 || eig.eigenvalues(p - 1) < -kPsdTol * std::abs(lmax)) {
    throw NotPsdError("matrix has negative eigenvalue " +
                      std::to_string(eig.eigenvalues(p - 1)));
  }
  const double cutoff = rank_tol * std::max(lmax, 0.0);
  Eigen::VectorXd f(p);
  for (int i = 0; i < p; ++i) {
    double lam = eig.eigenvalues(i);
    if (lam <= cutoff) {
      f(i) = 0.0;
      continue;
    }
    switch (map) {
      case SpectralMap::SqrtPinv: f(i) = 1.0 / std::sqrt(lam); break;
      case SpectralMap::Sqrt: f(i) = std::sqrt(lam); break;
      case SpectralMap::Pinv: f(i) = 1.0 / lam; break;
      case SpectralMap::Projector: f(i) = 1.0; break;
    }
  }
  Eigen::MatrixXd out =
      eig.eigenvectors * f.asDiagonal() * eig.eigenvectors.transpose();
  return SymMatrix(out);
}

}  // namespace

SymMatrix psd_sqrt_pseudoinverse(const SymMatrix& a, double rank_tol) {
  return spectral_transform(a, rank_tol, SpectralMap::SqrtPinv);
}

SymMatrix psd_sqrt(const SymMatrix& a, double rank_tol) {
  return spectral_transform(a, rank_tol, SpectralMap::Sqrt);
}

SymMatrix psd_pseudoinverse(const SymMatrix& a, double rank_tol) {
  return spectral_transform(a, rank_tol, SpectralMap::Pinv);
}

SymMatrix range_projector(const SymMatrix& a, double rank_tol) {
  return spectral_transform(a, rank_tol, SpectralMap::Projector);
}

SymMatrix load_sym_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("load_sym_csv: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InputError("load_sym_csv: bad number '" + cell + "' in " + path);
      }
    }
    rows.push_back(std::move(row));
  }
  const size_t p = rows.size();
  if (p == 0) throw InputError("load_sym_csv: empty file " + path);
  Eigen::MatrixXd m(p, p);
  for (size_t i = 0; i < p; ++i) {
    if (rows[i].size() != p) {
      throw InputError("load_sym_csv: row " + std::to_string(i + 1) + " has " +
                       std::to_string(rows[i].size()) + " entries, expected " +
                       std::to_string(p));
    }
    for (size_t j = 0; j < p; ++j) m(i, j) = rows[i][j];
  }
  double scale = m.cwiseAbs().maxCoeff();
  double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (scale > 0 && asym > 1e-8 * scale) {
    throw InputError("load_sym_csv: asymmetry " + std::to_string(asym / scale) +
                     " (relative) exceeds 1e-8 in " + path);
  }
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  return SymMatrix(sym);
}

void save_sym_csv(const SymMatrix& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("save_sym_csv: cannot open " + path);
  out << std::setprecision(17);
  for (int i = 0; i < a.dim(); ++i) {
    for (int j = 0; j < a.dim(); ++j) {
      if (j) out << ',';
      out << a(i, j);
    }
    out << '\n';
  }
}

}  // namespace covtail
