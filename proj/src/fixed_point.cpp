#include "relcheck/fixed_point.hpp"

#include <cmath>
#include <string>

#include "relcheck/errors.hpp"

namespace relcheck {

FixedPointCodec::FixedPointCodec(mpz_class n, unsigned scale_bits)
    : n_(std::move(n)), half_n_(n_ >> 1), scale_bits_(scale_bits) {
  if (scale_bits_ == 0) throw UsageError("scale_bits must be positive");
  if (n_ < 3) throw UsageError("codec modulus too small");
}

double FixedPointCodec::resolution() const { return std::ldexp(1.0, -static_cast<int>(scale_bits_)); }

mpz_class FixedPointCodec::quantize(double x) const {
  if (!std::isfinite(x)) throw RangeError("cannot encode non-finite value");
  // std::round is half-away-from-zero, which keeps encode(-x) == n - encode(x).
  const double scaled = std::round(std::ldexp(x, static_cast<int>(scale_bits_)));
  if (!std::isfinite(scaled)) throw RangeError("value " + std::to_string(x) + " exceeds fixed-point range");
  mpz_class r;
  mpz_set_d(r.get_mpz_t(), scaled);
  return r;
}

mpz_class FixedPointCodec::encode(double x) const {
  mpz_class r = quantize(x);
  mpz_class magnitude = abs(r);
  if (magnitude > half_n_) {  // n is odd: residues up to (n-1)/2 are nonnegative
    throw RangeError("value " + std::to_string(x) + " exceeds fixed-point range");
  }
  if (r < 0) r += n_;
  return r;
}

double FixedPointCodec::decode(const mpz_class& v, unsigned level) const {
  if (level < 1 || level > kMaxLevel) {
    throw DomainError("fixed-point level must be 1 or 2, got " + std::to_string(level));
  }
  mpz_class signed_v = v % n_;
  if (signed_v < 0) signed_v += n_;
  if (signed_v > half_n_) signed_v -= n_;
  long exp = 0;
  const double mantissa = mpz_get_d_2exp(&exp, signed_v.get_mpz_t());
  return std::ldexp(mantissa, static_cast<int>(exp) - static_cast<int>(level * scale_bits_));
}

void check_overflow_budget(const mpz_class& n, std::size_t param_count, unsigned scale_bits,
                           unsigned blind_bits) {
  mpz_class bound = param_count;
  bound <<= 2 * scale_bits + blind_bits;
  if (2 * bound >= n) {
    throw RangeError("overflow budget violated: F * 2^(2*scale_bits) * 2^blind_bits >= n/2 (F=" +
                     std::to_string(param_count) + ", scale_bits=" + std::to_string(scale_bits) +
                     ", blind_bits=" + std::to_string(blind_bits) + ")");
  }
}

}  // namespace relcheck
