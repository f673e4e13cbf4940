#include "covtail/distributions.hpp"

#include <cmath>

#include "covtail/errors.hpp"

namespace covtail {

ScalarDist ScalarDist::Constant(double c) {
  return ScalarDist(Kind::Constant, c, 0, 0);
}

ScalarDist ScalarDist::Gaussian(double sd) {
  if (sd < 0) throw InputError("ScalarDist::Gaussian: sd must be >= 0");
  return ScalarDist(Kind::Gaussian, sd, 0, 0);
}

ScalarDist ScalarDist::Rademacher() {
  return ScalarDist(Kind::Rademacher, 0, 0, 0);
}

ScalarDist ScalarDist::TwoPoint(double a, double b, double prob) {
  if (prob < 0 || prob > 1)
    throw InputError("ScalarDist::TwoPoint: prob must be in [0,1]");
  return ScalarDist(Kind::TwoPoint, a, b, prob);
}

ScalarDist ScalarDist::Uniform(double a, double b) {
  if (!(a < b)) throw InputError("ScalarDist::Uniform: need a < b");
  return ScalarDist(Kind::Uniform, a, b, 0);
}

ScalarDist ScalarDist::Exponential(double rate) {
  if (rate <= 0) throw InputError("ScalarDist::Exponential: rate must be > 0");
  return ScalarDist(Kind::Exponential, rate, 0, 0);
}

ScalarDist ScalarDist::StudentT(double df) {
  if (df <= 4)
    throw InputError("ScalarDist::StudentT: df must be > 4 for finite E W^4");
  return ScalarDist(Kind::StudentT, df, 0, 0);
}

std::string ScalarDist::name() const {
  switch (kind_) {
    case Kind::Constant: return "constant";
    case Kind::Gaussian: return "gaussian";
    case Kind::Rademacher: return "rademacher";
    case Kind::TwoPoint: return "two_point";
    case Kind::Uniform: return "uniform";
    case Kind::Exponential: return "exponential";
    case Kind::StudentT: return "student_t";
  }
  return "?";
}

double ScalarDist::sample(Rng& rng) const {
  switch (kind_) {
    case Kind::Constant:
      return a_;
    case Kind::Gaussian: {
      std::normal_distribution<double> d(0.0, a_);
      return d(rng);
    }
    case Kind::Rademacher: {
      return (rng() & 1ULL) ? 1.0 : -1.0;
    }
    case Kind::TwoPoint: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      return u(rng) < c_ ? b_ : a_;
    }
    case Kind::Uniform: {
      std::uniform_real_distribution<double> u(a_, b_);
      return u(rng);
    }
    case Kind::Exponential: {
      std::exponential_distribution<double> d(a_);
      return d(rng);
    }
    case Kind::StudentT: {
      std::student_t_distribution<double> d(a_);
      return d(rng);
    }
  }
  return 0.0;
}

double ScalarDist::mean() const {
  switch (kind_) {
    case Kind::Constant: return a_;
    case Kind::Gaussian: return 0.0;
    case Kind::Rademacher: return 0.0;
    case Kind::TwoPoint: return (1 - c_) * a_ + c_ * b_;
    case Kind::Uniform: return 0.5 * (a_ + b_);
    case Kind::Exponential: return 1.0 / a_;
    case Kind::StudentT: return 0.0;
  }
  return 0.0;
}

double ScalarDist::moment2() const {
  switch (kind_) {
    case Kind::Constant: return a_ * a_;
    case Kind::Gaussian: return a_ * a_;
    case Kind::Rademacher: return 1.0;
    case Kind::TwoPoint: return (1 - c_) * a_ * a_ + c_ * b_ * b_;
    case Kind::Uniform:
      return (b_ * b_ * b_ - a_ * a_ * a_) / (3.0 * (b_ - a_));
    case Kind::Exponential: return 2.0 / (a_ * a_);
    case Kind::StudentT: return a_ / (a_ - 2.0);
  }
  return 0.0;
}

double ScalarDist::moment4() const {
  switch (kind_) {
    case Kind::Constant: return std::pow(a_, 4);
    case Kind::Gaussian: return 3.0 * std::pow(a_, 4);
    case Kind::Rademacher: return 1.0;
    case Kind::TwoPoint:
      return (1 - c_) * std::pow(a_, 4) + c_ * std::pow(b_, 4);
    case Kind::Uniform:
      return (std::pow(b_, 5) - std::pow(a_, 5)) / (5.0 * (b_ - a_));
    case Kind::Exponential: return 24.0 / std::pow(a_, 4);
    case Kind::StudentT:
      return 3.0 * a_ * a_ / ((a_ - 2.0) * (a_ - 4.0));
  }
  return 0.0;
}

std::optional<double> ScalarDist::abs_moment(double q) const {
  if (q < 0) throw InputError("ScalarDist::abs_moment: q must be >= 0");
  switch (kind_) {
    case Kind::Constant:
      return std::pow(std::abs(a_), q);
    case Kind::Gaussian:
      // E|N(0,sd)|^q = sd^q 2^{q/2} Gamma((q+1)/2) / sqrt(pi)
      return std::pow(a_, q) * std::pow(2.0, q / 2.0) *
             std::tgamma((q + 1.0) / 2.0) / std::sqrt(M_PI);
    case Kind::Rademacher:
      return 1.0;
    case Kind::TwoPoint:
      return (1 - c_) * std::pow(std::abs(a_), q) +
             c_ * std::pow(std::abs(b_), q);
    case Kind::Uniform: {
      auto piece = [&](double lo, double hi) {
        // integral of |x|^q over [lo,hi], 0 <= lo <= hi
        return (std::pow(hi, q + 1) - std::pow(lo, q + 1)) / (q + 1);
      };
      double integral;
      if (a_ >= 0) integral = piece(a_, b_);
      else if (b_ <= 0) integral = piece(-b_, -a_);
      else integral = piece(0, -a_) + piece(0, b_);
      return integral / (b_ - a_);
    }
    case Kind::Exponential:
      return std::tgamma(q + 1.0) / std::pow(a_, q);
    case Kind::StudentT:
      return std::nullopt;
  }
  return std::nullopt;
}

bool ScalarDist::nonnegative() const {
  switch (kind_) {
    case Kind::Constant: return a_ >= 0;
    case Kind::TwoPoint: return a_ >= 0 && b_ >= 0;
    case Kind::Uniform: return a_ >= 0;
    case Kind::Exponential: return true;
    default: return false;
  }
}

}  // namespace covtail
