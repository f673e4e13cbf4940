#include "covtail/gf2.hpp"

#include "covtail/errors.hpp"

namespace covtail {

namespace {

// Irreducible polynomials over GF(2), bit i = coefficient of x^i.
// Standard published choices (primitive trinomials/pentanomials).
constexpr std::uint32_t kReductionPoly[17] = {
    0,
    0x3,      // k=1:  x + 1
    0x7,      // k=2:  x^2 + x + 1
    0xB,      // k=3:  x^3 + x + 1
    0x13,     // k=4:  x^4 + x + 1
    0x25,     // k=5:  x^5 + x^2 + 1
    0x43,     // k=6:  x^6 + x + 1
    0x83,     // k=7:  x^7 + x + 1
    0x11B,    // k=8:  x^8 + x^4 + x^3 + x + 1
    0x211,    // k=9:  x^9 + x^4 + 1
    0x409,    // k=10: x^10 + x^3 + 1
    0x805,    // k=11: x^11 + x^2 + 1
    0x1053,   // k=12: x^12 + x^6 + x^4 + x + 1
    0x201B,   // k=13: x^13 + x^4 + x^3 + x + 1
    0x4443,   // k=14: x^14 + x^10 + x^6 + x + 1
    0x8003,   // k=15: x^15 + x + 1
    0x1100B,  // k=16: x^16 + x^12 + x^3 + x + 1
};

}  // namespace

GF2Field::GF2Field(int k) : k_(k) {
  if (k < 1 || k > 16) throw InputError("GF2Field: k must be in [1,16]");
  poly_ = kReductionPoly[k];
}

std::uint32_t GF2Field::mul(std::uint32_t a, std::uint32_t b) const {
  std::uint32_t r = 0;
  const std::uint32_t high = 1u << k_;
  while (b) {
    if (b & 1u) r ^= a;
    b >>= 1;
    a <<= 1;
    if (a & high) a ^= poly_;
  }
  return r;
}

int GF2Field::trace(std::uint32_t x) const {
  std::uint32_t acc = 0;
  std::uint32_t y = x;
  for (int i = 0; i < k_; ++i) {
    acc ^= y;
    y = mul(y, y);
  }
  // the absolute trace lands in the prime field
  return static_cast<int>(acc & 1u);
}

std::uint32_t GF2Field::eval_cubic(std::uint32_t a, std::uint32_t b,
                                   std::uint32_t c, std::uint32_t d,
                                   std::uint32_t x) const {
  // Horner
  std::uint32_t r = a;
  r = add(mul(r, x), b);
  r = add(mul(r, x), c);
  r = add(mul(r, x), d);
  return r;
}

int fourwise_field_bits(int p) {
  if (p < 1) throw InputError("fourwise_field_bits: p must be >= 1");
  int k = 1;
  while ((1 << k) < p) ++k;
  return k;
}

Eigen::VectorXd fourwise_rademacher_sample(int p, std::uint64_t seed_bits) {
  const int k = fourwise_field_bits(p);
  if (4 * k < 64 && (seed_bits >> (4 * k)) != 0) {
    throw InputError("fourwise_rademacher_sample: seed has more than " +
                     std::to_string(4 * k) + " bits");
  }
  GF2Field field(k);
  const std::uint32_t mask = (1u << k) - 1u;
  const std::uint32_t d = static_cast<std::uint32_t>(seed_bits) & mask;
  const std::uint32_t c = static_cast<std::uint32_t>(seed_bits >> k) & mask;
  const std::uint32_t b = static_cast<std::uint32_t>(seed_bits >> (2 * k)) & mask;
  const std::uint32_t a = static_cast<std::uint32_t>(seed_bits >> (3 * k)) & mask;
  Eigen::VectorXd out(p);
  for (int j = 0; j < p; ++j) {
    int bit = field.trace(field.eval_cubic(a, b, c, d, static_cast<std::uint32_t>(j)));
    out(j) = bit ? -1.0 : 1.0;
  }
  return out;
}

}  // namespace covtail
