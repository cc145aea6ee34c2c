#include "relcheck/bigint.hpp"

#include <stdexcept>

namespace relcheck::bigint {

mpz_class random_bits(Rng& rng, unsigned bits) {
  mpz_class out = 0;
  unsigned remaining = bits;
  while (remaining >= 64) {
    const std::uint64_t word = rng();
    out <<= 64;
    mpz_class w;
    mpz_import(w.get_mpz_t(), 1, 1, sizeof(word), 0, 0, &word);
    out += w;
    remaining -= 64;
  }
  if (remaining > 0) {
    const std::uint64_t word = rng() >> (64 - remaining);
    out <<= remaining;
    mpz_class w;
    mpz_import(w.get_mpz_t(), 1, 1, sizeof(word), 0, 0, &word);
    out += w;
  }
  return out;
}

mpz_class random_below(Rng& rng, const mpz_class& bound) {
  if (bound <= 0) {
    throw std::invalid_argument("random_below: bound must be positive");
  }
  const unsigned bits = static_cast<unsigned>(mpz_sizeinbase(bound.get_mpz_t(), 2));
  for (;;) {
    mpz_class candidate = random_bits(rng, bits);
    if (candidate < bound) return candidate;
  }
}

std::vector<std::uint8_t> to_bytes(const mpz_class& value) {
  if (value == 0) return {};
  const std::size_t size = (mpz_sizeinbase(value.get_mpz_t(), 2) + 7) / 8;
  std::vector<std::uint8_t> out(size);
  std::size_t written = 0;
  mpz_export(out.data(), &written, 1, 1, 1, 0, value.get_mpz_t());
  out.resize(written);
  return out;
}

mpz_class from_bytes(std::span<const std::uint8_t> bytes) {
  mpz_class out = 0;
  if (!bytes.empty()) {
    mpz_import(out.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  }
  return out;
}

std::uint64_t fingerprint(const mpz_class& value) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : to_bytes(value)) {
    hash ^= b;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace relcheck::bigint
