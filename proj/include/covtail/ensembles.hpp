#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "covtail/distributions.hpp"
#include "covtail/seed.hpp"
#include "covtail/sym_matrix.hpp"

namespace covtail {

/// n i.i.d. draws, one sample per row; responses present for regression data.
struct SampleBatch {
  Eigen::MatrixXd vectors;  // n x p
  std::optional<Eigen::VectorXd> responses;

  int n() const { return static_cast<int>(vectors.rows()); }
  int p() const { return static_cast<int>(vectors.cols()); }
};

/// Description of a random-vector law. All variants are mean-describable
/// and have exact second moments so experiments can use exact constants.
class EnsembleSpec {
 public:
  struct GaussianV {
    SymMatrix sigma;
    Eigen::MatrixXd sqrt;  // sigma^{1/2}, cached
  };
  struct IndependentV {
    std::vector<ScalarDist> coords;
  };
  struct ScalarMixedV {
    std::shared_ptr<const EnsembleSpec> base;
    ScalarDist mixer;
  };
  struct FourwiseV {
    int p;
  };
  struct AffineV {
    std::shared_ptr<const EnsembleSpec> base;
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
  };
  using Variant =
      std::variant<GaussianV, IndependentV, ScalarMixedV, FourwiseV, AffineV>;

  static EnsembleSpec Gaussian(const SymMatrix& sigma);
  static EnsembleSpec IndependentCoords(std::vector<ScalarDist> coords);
  static EnsembleSpec ScalarMixed(EnsembleSpec base, const ScalarDist& mixer);
  static EnsembleSpec FourwiseRademacher(int p);
  static EnsembleSpec Affine(EnsembleSpec base, const Eigen::MatrixXd& a,
                             const Eigen::VectorXd& b);

  int dim() const { return dim_; }
  const Variant& variant() const { return variant_; }
  std::string name() const;

 private:
  EnsembleSpec(Variant v, int dim) : variant_(std::move(v)), dim_(dim) {}
  Variant variant_;
  int dim_;
};

SampleBatch sample_batch(const EnsembleSpec& spec, int n, std::uint64_t seed);

/// Rows xi_i * X_i with the mixer independent of the base draw. With a
/// constant mixer and the same seed the base rows are reproduced exactly.
SampleBatch scalar_mixed_sample(const EnsembleSpec& base,
                                const ScalarDist& mixer, int n,
                                std::uint64_t seed);

Eigen::VectorXd population_mean(const EnsembleSpec& spec);
/// Sigma = E X X^T (uncentered second-moment matrix, as used throughout).
SymMatrix population_covariance(const EnsembleSpec& spec);

/// Exact moment-equivalence constant h when a closed form is known.
std::optional<double> exact_h(const EnsembleSpec& spec);

struct LinearModelSpec {
  EnsembleSpec design;
  Eigen::VectorXd beta_min;
  double noise_sigma = 0.0;  // Gaussian noise std, independent of X
};

SampleBatch sample_linear_model(const LinearModelSpec& spec, int n,
                                std::uint64_t seed);

/// CSV: header x1,...,xp[,y], one sample per row, 17 significant digits.
void save_batch_csv(const SampleBatch& batch, const std::string& path);

}  // namespace covtail
