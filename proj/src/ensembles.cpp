#include "covtail/ensembles.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "covtail/errors.hpp"
#include "covtail/gf2.hpp"

namespace covtail {

namespace {

constexpr std::uint64_t kBaseStream = 0xBA5EBA5Eu;
constexpr std::uint64_t kMixerStream = 0x312C5EEDu;
constexpr std::uint64_t kDesignStream = 0xDE516Eu;
constexpr std::uint64_t kNoiseStream = 0x0152Eu;

bool valid_mixer(const ScalarDist& mixer) {
  switch (mixer.kind()) {
    case ScalarDist::Kind::Constant:
    case ScalarDist::Kind::Rademacher:
    case ScalarDist::Kind::StudentT:
    case ScalarDist::Kind::TwoPoint:
      return true;
    default:
      return false;
  }
}

}  // namespace

EnsembleSpec EnsembleSpec::Gaussian(const SymMatrix& sigma) {
  auto [lmax, lmin] = op_norm_and_min_eig(sigma);
  if (lmin < -kPsdTol * std::max(lmax, 0.0)) {
    throw NotPsdError("EnsembleSpec::Gaussian: sigma is not PSD (lambda_min = " +
                      std::to_string(lmin) + ")");
  }
  GaussianV v{sigma, psd_sqrt(sigma).mat()};
  return EnsembleSpec(Variant(std::move(v)), sigma.dim());
}

EnsembleSpec EnsembleSpec::IndependentCoords(std::vector<ScalarDist> coords) {
  if (coords.empty())
    throw InputError("EnsembleSpec::IndependentCoords: empty coordinate list");
  int p = static_cast<int>(coords.size());
  return EnsembleSpec(Variant(IndependentV{std::move(coords)}), p);
}

EnsembleSpec EnsembleSpec::ScalarMixed(EnsembleSpec base,
                                       const ScalarDist& mixer) {
  if (!valid_mixer(mixer)) {
    throw InputError("EnsembleSpec::ScalarMixed: unsupported mixer tag '" +
                     mixer.name() + "'");
  }
  int p = base.dim();
  ScalarMixedV v{std::make_shared<EnsembleSpec>(std::move(base)), mixer};
  return EnsembleSpec(Variant(std::move(v)), p);
}

EnsembleSpec EnsembleSpec::FourwiseRademacher(int p) {
  if (p < 1) throw InputError("EnsembleSpec::FourwiseRademacher: p must be >= 1");
  if (fourwise_field_bits(p) > 16)
    throw InputError("EnsembleSpec::FourwiseRademacher: p too large (k > 16)");
  return EnsembleSpec(Variant(FourwiseV{p}), p);
}

EnsembleSpec EnsembleSpec::Affine(EnsembleSpec base, const Eigen::MatrixXd& a,
                                  const Eigen::VectorXd& b) {
  if (a.cols() != base.dim()) {
    throw InputError("EnsembleSpec::Affine: A has " + std::to_string(a.cols()) +
                     " columns, base dimension is " + std::to_string(base.dim()));
  }
  if (b.size() != a.rows()) {
    throw InputError("EnsembleSpec::Affine: b has length " +
                     std::to_string(b.size()) + ", A has " +
                     std::to_string(a.rows()) + " rows");
  }
  int p = static_cast<int>(a.rows());
  AffineV v{std::make_shared<EnsembleSpec>(std::move(base)), a, b};
  return EnsembleSpec(Variant(std::move(v)), p);
}

std::string EnsembleSpec::name() const {
  struct Namer {
    std::string operator()(const GaussianV&) { return "gaussian"; }
    std::string operator()(const IndependentV&) { return "independent_coords"; }
    std::string operator()(const ScalarMixedV& v) {
      return "scalar_mixed(" + v.base->name() + " x " + v.mixer.name() + ")";
    }
    std::string operator()(const FourwiseV&) { return "fourwise_rademacher"; }
    std::string operator()(const AffineV& v) {
      return "affine(" + v.base->name() + ")";
    }
  };
  return std::visit(Namer{}, variant_);
}

SampleBatch sample_batch(const EnsembleSpec& spec, int n, std::uint64_t seed) {
  if (n < 1) throw InputError("sample_batch: n must be >= 1");
  const int p = spec.dim();
  SampleBatch batch;
  batch.vectors.resize(n, p);

  struct Sampler {
    int n, p;
    std::uint64_t seed;
    Eigen::MatrixXd& rows;

    void operator()(const EnsembleSpec::GaussianV& v) {
      Rng rng = make_rng(seed, 0);
      std::normal_distribution<double> normal(0.0, 1.0);
      Eigen::VectorXd z(p);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) z(j) = normal(rng);
        rows.row(i) = (v.sqrt * z).transpose();
      }
    }
    void operator()(const EnsembleSpec::IndependentV& v) {
      Rng rng = make_rng(seed, 0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) rows(i, j) = v.coords[j].sample(rng);
    }
    void operator()(const EnsembleSpec::ScalarMixedV& v) {
      SampleBatch base = sample_batch(*v.base, n, mix_seed(seed, kBaseStream));
      Rng rng = make_rng(seed, kMixerStream);
      for (int i = 0; i < n; ++i)
        rows.row(i) = v.mixer.sample(rng) * base.vectors.row(i);
    }
    void operator()(const EnsembleSpec::FourwiseV& v) {
      Rng rng = make_rng(seed, 0);
      const int k = fourwise_field_bits(v.p);
      const std::uint64_t mask =
          (4 * k >= 64) ? ~0ULL : ((1ULL << (4 * k)) - 1ULL);
      for (int i = 0; i < n; ++i) {
        std::uint64_t bits = rng() & mask;
        rows.row(i) = fourwise_rademacher_sample(v.p, bits).transpose();
      }
    }
    void operator()(const EnsembleSpec::AffineV& v) {
      SampleBatch base = sample_batch(*v.base, n, mix_seed(seed, kBaseStream));
      for (int i = 0; i < n; ++i)
        rows.row(i) =
            (v.a * base.vectors.row(i).transpose() + v.b).transpose();
    }
  };
  std::visit(Sampler{n, p, seed, batch.vectors}, spec.variant());
  return batch;
}

SampleBatch scalar_mixed_sample(const EnsembleSpec& base,
                                const ScalarDist& mixer, int n,
                                std::uint64_t seed) {
  return sample_batch(EnsembleSpec::ScalarMixed(base, mixer), n, seed);
}

Eigen::VectorXd population_mean(const EnsembleSpec& spec) {
  struct Mean {
    const EnsembleSpec& spec;
    Eigen::VectorXd operator()(const EnsembleSpec::GaussianV&) {
      return Eigen::VectorXd::Zero(spec.dim());
    }
    Eigen::VectorXd operator()(const EnsembleSpec::IndependentV& v) {
      Eigen::VectorXd m(spec.dim());
      for (int j = 0; j < spec.dim(); ++j) m(j) = v.coords[j].mean();
      return m;
    }
    Eigen::VectorXd operator()(const EnsembleSpec::ScalarMixedV& v) {
      return v.mixer.mean() * population_mean(*v.base);
    }
    Eigen::VectorXd operator()(const EnsembleSpec::FourwiseV&) {
      return Eigen::VectorXd::Zero(spec.dim());
    }
    Eigen::VectorXd operator()(const EnsembleSpec::AffineV& v) {
      return v.a * population_mean(*v.base) + v.b;
    }
  };
  return std::visit(Mean{spec}, spec.variant());
}

SymMatrix population_covariance(const EnsembleSpec& spec) {
  struct Cov {
    const EnsembleSpec& spec;
    SymMatrix operator()(const EnsembleSpec::GaussianV& v) { return v.sigma; }
    SymMatrix operator()(const EnsembleSpec::IndependentV& v) {
      Eigen::VectorXd mu = population_mean(spec);
      Eigen::MatrixXd m = mu * mu.transpose();
      for (int j = 0; j < spec.dim(); ++j) m(j, j) = v.coords[j].moment2();
      return SymMatrix(m);
    }
    SymMatrix operator()(const EnsembleSpec::ScalarMixedV& v) {
      return SymMatrix(v.mixer.moment2() *
                       population_covariance(*v.base).mat());
    }
    SymMatrix operator()(const EnsembleSpec::FourwiseV&) {
      return SymMatrix::Identity(spec.dim());
    }
    SymMatrix operator()(const EnsembleSpec::AffineV& v) {
      Eigen::MatrixXd sb = population_covariance(*v.base).mat();
      Eigen::VectorXd mu = v.a * population_mean(*v.base);
      Eigen::MatrixXd m = v.a * sb * v.a.transpose() + mu * v.b.transpose() +
                          v.b * mu.transpose() + v.b * v.b.transpose();
      return SymMatrix(m);
    }
  };
  return std::visit(Cov{spec}, spec.variant());
}

std::optional<double> exact_h(const EnsembleSpec& spec) {
  struct H {
    const EnsembleSpec& spec;
    std::optional<double> operator()(const EnsembleSpec::GaussianV&) {
      return std::sqrt(3.0);
    }
    std::optional<double> operator()(const EnsembleSpec::IndependentV& v) {
      double worst = 1.0;
      for (const auto& coord : v.coords) {
        if (std::abs(coord.mean()) > 0) return std::nullopt;  // needs mean 0
        double m2 = coord.moment2();
        if (m2 <= 0) continue;
        worst = std::max(worst, std::sqrt(coord.moment4()) / m2);
      }
      return std::max(6.0, worst);
    }
    std::optional<double> operator()(const EnsembleSpec::ScalarMixedV& v) {
      auto base = exact_h(*v.base);
      if (!base) return std::nullopt;
      double m2 = v.mixer.moment2();
      if (m2 <= 0) return std::nullopt;
      double hstar = std::sqrt(v.mixer.moment4()) / m2;
      return *base * hstar;
    }
    std::optional<double> operator()(const EnsembleSpec::FourwiseV&) {
      return 6.0;
    }
    std::optional<double> operator()(const EnsembleSpec::AffineV& v) {
      auto base = exact_h(*v.base);
      if (!base) return std::nullopt;
      if (v.b.isZero(0.0)) return base;  // linear invariance
      return 2.0 * std::sqrt(2.0) * (*base);
    }
  };
  return std::visit(H{spec}, spec.variant());
}

SampleBatch sample_linear_model(const LinearModelSpec& spec, int n,
                                std::uint64_t seed) {
  if (spec.beta_min.size() != spec.design.dim()) {
    throw InputError("sample_linear_model: beta_min has length " +
                     std::to_string(spec.beta_min.size()) +
                     ", design dimension is " +
                     std::to_string(spec.design.dim()));
  }
  if (!spec.beta_min.allFinite())
    throw InputError("sample_linear_model: beta_min has non-finite entries");
  if (spec.noise_sigma < 0)
    throw InputError("sample_linear_model: noise_sigma must be >= 0");
  SampleBatch batch = sample_batch(spec.design, n, mix_seed(seed, kDesignStream));
  Eigen::VectorXd y = batch.vectors * spec.beta_min;
  if (spec.noise_sigma > 0) {
    Rng rng = make_rng(seed, kNoiseStream);
    std::normal_distribution<double> normal(0.0, spec.noise_sigma);
    for (int i = 0; i < n; ++i) y(i) += normal(rng);
  }
  batch.responses = y;
  return batch;
}

void save_batch_csv(const SampleBatch& batch, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("save_batch_csv: cannot open " + path);
  for (int j = 0; j < batch.p(); ++j) {
    if (j) out << ',';
    out << 'x' << (j + 1);
  }
  if (batch.responses) out << ",y";
  out << '\n';
  out << std::setprecision(17);
  for (int i = 0; i < batch.n(); ++i) {
    for (int j = 0; j < batch.p(); ++j) {
      if (j) out << ',';
      out << batch.vectors(i, j);
    }
    if (batch.responses) out << ',' << (*batch.responses)(i);
    out << '\n';
  }
}

}  // namespace covtail
