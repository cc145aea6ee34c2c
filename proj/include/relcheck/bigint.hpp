#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <gmpxx.h>

#include "relcheck/random.hpp"

namespace relcheck::bigint {

// Uniform integer with exactly `bits` random bits (top bit not forced).
mpz_class random_bits(Rng& rng, unsigned bits);

// Uniform integer in [0, bound) by rejection sampling. bound must be > 0.
mpz_class random_below(Rng& rng, const mpz_class& bound);

// Big-endian magnitude bytes. Zero encodes as an empty vector.
std::vector<std::uint8_t> to_bytes(const mpz_class& value);
mpz_class from_bytes(std::span<const std::uint8_t> bytes);

// 64-bit FNV-1a over the big-endian bytes; used to bind ciphertexts to a key.
std::uint64_t fingerprint(const mpz_class& value);

}  // namespace relcheck::bigint
