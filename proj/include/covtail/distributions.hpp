#pragma once

#include <optional>
#include <string>

#include "covtail/seed.hpp"

namespace covtail {

/// Tagged scalar distribution with closed-form moment metadata.
///
/// The menu is restricted to laws whose moments we can write down exactly:
/// the concentration verifiers and the h / h_star computations all need
/// exact constants on the right-hand side of their bounds.
class ScalarDist {
 public:
  enum class Kind { Constant, Gaussian, Rademacher, TwoPoint, Uniform,
                    Exponential, StudentT };

  static ScalarDist Constant(double c);
  static ScalarDist Gaussian(double sd = 1.0);
  static ScalarDist Rademacher();
  /// P(value = a) = 1 - prob, P(value = b) = prob.
  static ScalarDist TwoPoint(double a, double b, double prob);
  static ScalarDist Uniform(double a, double b);
  static ScalarDist Exponential(double rate = 1.0);
  /// Student t with df > 4 so the fourth moment exists.
  static ScalarDist StudentT(double df);

  Kind kind() const { return kind_; }
  std::string name() const;

  double sample(Rng& rng) const;

  double mean() const;
  double moment2() const;   // E W^2
  double moment4() const;   // E W^4
  /// E |W|^q when a closed form is available, else nullopt.
  std::optional<double> abs_moment(double q) const;

  bool nonnegative() const;

 private:
  ScalarDist(Kind kind, double a, double b, double c)
      : kind_(kind), a_(a), b_(b), c_(c) {}
  Kind kind_;
  double a_ = 0, b_ = 0, c_ = 0;
};

}  // namespace covtail
