#pragma once

// Element-wise Paillier kernels over parameter vectors.
//
// Every kernel exists twice: `serial` is the reference loop, `parallel`
// distributes elements across OpenMP threads. Both produce bit-identical
// output; encryption nonces for element i are derived from (nonce_seed, i)
// so the result does not depend on scheduling.

#include <cstdint>
#include <span>
#include <vector>

#include <gmpxx.h>

#include "relcheck/fixed_point.hpp"
#include "relcheck/paillier.hpp"

namespace relcheck::kernels {

using paillier::Ciphertext;
using paillier::PrivateKey;
using paillier::PublicKey;
using CipherVector = std::vector<Ciphertext>;

std::vector<mpz_class> encode_all(const FixedPointCodec& codec, std::span<const double> values);
std::vector<double> decode_all(const FixedPointCodec& codec, std::span<const mpz_class> residues,
                               unsigned level = 1);

namespace serial {

CipherVector encrypt(const PublicKey& pk, std::span<const mpz_class> plain, std::uint64_t nonce_seed);
std::vector<mpz_class> decrypt(const PrivateKey& sk, std::span<const Ciphertext> ciphers);
CipherVector add(const PublicKey& pk, std::span<const Ciphertext> a, std::span<const Ciphertext> b);
CipherVector scale(const PublicKey& pk, std::span<const Ciphertext> c, const mpz_class& k);
// prod_i c_i^{k_i} mod n^2, i.e. E(sum_i m_i * k_i).
Ciphertext inner_product(const PublicKey& pk, std::span<const Ciphertext> c,
                         std::span<const mpz_class> k);

}  // namespace serial

namespace parallel {

CipherVector encrypt(const PublicKey& pk, std::span<const mpz_class> plain, std::uint64_t nonce_seed);
std::vector<mpz_class> decrypt(const PrivateKey& sk, std::span<const Ciphertext> ciphers);
CipherVector add(const PublicKey& pk, std::span<const Ciphertext> a, std::span<const Ciphertext> b);
CipherVector scale(const PublicKey& pk, std::span<const Ciphertext> c, const mpz_class& k);
Ciphertext inner_product(const PublicKey& pk, std::span<const Ciphertext> c,
                         std::span<const mpz_class> k);

}  // namespace parallel

// Threads available to the parallel kernels (1 when built without OpenMP).
int max_threads();

}  // namespace relcheck::kernels
