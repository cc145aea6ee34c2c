#pragma once

#include <cstdint>

#include <gmpxx.h>

namespace relcheck {

// Maps signed reals to residues mod n: x -> round(x * 2^scale_bits) mod n,
// negatives wrapping to n - |.|. A residue carrying `level` scale factors
// decodes by dividing by 2^(level * scale_bits); level 2 appears after an
// encoded ciphertext is exponentiated by another encoded value.
class FixedPointCodec {
 public:
  static constexpr unsigned kDefaultScaleBits = 32;
  static constexpr unsigned kMaxLevel = 2;

  FixedPointCodec(mpz_class n, unsigned scale_bits = kDefaultScaleBits);

  // Throws RangeError for non-finite x or |x| >= n / 2^(scale_bits + 1).
  mpz_class encode(double x) const;

  // Values above n/2 are read as negative. Throws DomainError unless
  // 1 <= level <= kMaxLevel.
  double decode(const mpz_class& v, unsigned level = 1) const;

  // Signed integer r = round(x * 2^scale_bits) before reduction mod n.
  mpz_class quantize(double x) const;

  const mpz_class& modulus() const { return n_; }
  unsigned scale_bits() const { return scale_bits_; }
  double resolution() const;

 private:
  mpz_class n_;
  mpz_class half_n_;
  unsigned scale_bits_;
};

// Refuses (RangeError) configurations where param_count * 2^(2*scale_bits) * blind_bound
// would not fit under n/2, so level-2 inner products never wrap.
void check_overflow_budget(const mpz_class& n, std::size_t param_count, unsigned scale_bits,
                           unsigned blind_bits);

}  // namespace relcheck
