#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace covtail {

/// Arithmetic in GF(2^k), 1 <= k <= 16, with a fixed irreducible
/// polynomial per k so field elements and traces are bit-exact.
class GF2Field {
 public:
  explicit GF2Field(int k);

  int k() const { return k_; }
  std::uint32_t reduction_poly() const { return poly_; }

  std::uint32_t add(std::uint32_t a, std::uint32_t b) const { return a ^ b; }
  std::uint32_t mul(std::uint32_t a, std::uint32_t b) const;

  /// Absolute trace GF(2^k) -> GF(2), returned as 0 or 1.
  int trace(std::uint32_t x) const;

  /// a x^3 + b x^2 + c x + d.
  std::uint32_t eval_cubic(std::uint32_t a, std::uint32_t b, std::uint32_t c,
                           std::uint32_t d, std::uint32_t x) const;

 private:
  int k_;
  std::uint32_t poly_;
};

/// Smallest k with 2^k >= p (at least 1).
int fourwise_field_bits(int p);

/// Four-wise independent +-1 vector of length p from a 4k-bit seed.
///
/// The seed packs the cubic's coefficients as (((a << k | b) << k | c) << k | d);
/// coordinate j is (-1)^{Tr(a x_j^3 + b x_j^2 + c x_j + d)} where x_j is the
/// field element with bit pattern j. Bit-to-sign map: 0 -> +1, 1 -> -1.
Eigen::VectorXd fourwise_rademacher_sample(int p, std::uint64_t seed_bits);

}  // namespace covtail
