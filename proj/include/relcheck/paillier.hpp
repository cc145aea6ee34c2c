#pragma once

// Paillier cryptosystem over GMP integers.
//
// Plaintexts are residues in Z_n. Ciphertexts live in Z*_{n^2}; adding two
// ciphertexts multiplies them mod n^2 and scaling by a plaintext constant
// exponentiates. The generator is fixed to g = n + 1, so g^m = 1 + m*n mod n^2.

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "relcheck/random.hpp"

namespace relcheck::paillier {

inline constexpr unsigned kMinKeyBits = 64;
inline constexpr unsigned kDefaultKeyBits = 1024;
inline constexpr int kPrimalityRounds = 40;  // error < 4^-40 = 2^-80
inline constexpr std::uint8_t kKeyFormatVersion = 1;

struct PublicKey {
  mpz_class n;
  mpz_class n_squared;
  mpz_class g;
  unsigned key_bits = 0;
  std::uint64_t key_id = 0;

  friend bool operator==(const PublicKey& a, const PublicKey& b) {
    return a.n == b.n && a.g == b.g && a.key_bits == b.key_bits;
  }
};

struct PrivateKey {
  mpz_class lambda;
  mpz_class mu;
  mpz_class n;
  mpz_class n_squared;
  unsigned key_bits = 0;
  std::uint64_t key_id = 0;

  friend bool operator==(const PrivateKey& a, const PrivateKey& b) {
    return a.lambda == b.lambda && a.mu == b.mu && a.n == b.n;
  }
};

struct Ciphertext {
  mpz_class value;
  std::uint64_t key_id = 0;

  friend bool operator==(const Ciphertext& a, const Ciphertext& b) {
    return a.key_id == b.key_id && a.value == b.value;
  }
};

struct KeyPair {
  PublicKey pub;
  PrivateKey priv;
};

// Draws two distinct key_bits/2-bit primes p, q with gcd(pq, (p-1)(q-1)) = 1
// and n = pq of exactly key_bits bits. Deterministic for a given rng state.
// Throws UsageError if key_bits < min_key_bits; GenerationError if no primes
// are found within the attempt budget.
KeyPair generate_keypair(unsigned key_bits, Rng& rng, unsigned min_key_bits = kMinKeyBits);

// Builds the key pair for caller-chosen primes. Throws GenerationError when
// p == q, either is composite, or gcd(pq, (p-1)(q-1)) != 1.
KeyPair keypair_from_primes(const mpz_class& p, const mpz_class& q);

// Uniform r in Z*_n.
mpz_class sample_nonce(const PublicKey& pk, Rng& rng);

Ciphertext encrypt(const PublicKey& pk, const mpz_class& m, Rng& rng);

// Encryption with a caller-supplied nonce r in Z*_n.
Ciphertext encrypt_with_nonce(const PublicKey& pk, const mpz_class& m, const mpz_class& r);

mpz_class decrypt(const PrivateKey& sk, const Ciphertext& c);

Ciphertext add_cipher(const PublicKey& pk, const Ciphertext& c1, const Ciphertext& c2);

// c^k mod n^2. Exponents above n/2 are evaluated as (c^-1)^(n-k), which
// decrypts to the same residue at a fraction of the cost.
Ciphertext scalar_mul(const PublicKey& pk, const Ciphertext& c, const mpz_class& k);

// L(x) = (x - 1) / n with exact division.
mpz_class L(const mpz_class& x, const mpz_class& n);

// Throws KeyError unless c is bound to pk.
void check_key(const PublicKey& pk, const Ciphertext& c);

// Key files: magic, format version, key_bits, then length-prefixed
// big-endian integers (public: n, g; private: lambda, mu, n).
std::vector<std::uint8_t> serialize(const PublicKey& pk);
std::vector<std::uint8_t> serialize(const PrivateKey& sk);
PublicKey deserialize_public(std::span<const std::uint8_t> bytes);
PrivateKey deserialize_private(std::span<const std::uint8_t> bytes);

void write_key_files(const KeyPair& keys, const std::filesystem::path& stem);
PublicKey read_public_key(const std::filesystem::path& path);
PrivateKey read_private_key(const std::filesystem::path& path);

}  // namespace relcheck::paillier
