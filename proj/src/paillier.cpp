#include "relcheck/paillier.hpp"

#include <fstream>
#include <iterator>
#include <string>

#include "relcheck/bigint.hpp"
#include "relcheck/byte_io.hpp"
#include "relcheck/errors.hpp"

namespace relcheck::paillier {
namespace {

constexpr std::uint32_t kPublicMagic = 0x52435042;   // "RCPB"
constexpr std::uint32_t kPrivateMagic = 0x52435056;  // "RCPV"
constexpr int kPairAttempts = 256;

mpz_class random_prime(unsigned bits, Rng& rng) {
  const unsigned budget = 100 * bits + 100;
  for (unsigned attempt = 0; attempt < budget; ++attempt) {
    mpz_class candidate = bigint::random_bits(rng, bits);
    mpz_setbit(candidate.get_mpz_t(), bits - 1);
    mpz_setbit(candidate.get_mpz_t(), 0);
    if (mpz_probab_prime_p(candidate.get_mpz_t(), kPrimalityRounds) != 0) {
      return candidate;
    }
  }
  throw GenerationError("no " + std::to_string(bits) + "-bit prime found within attempt budget");
}

mpz_class gcd(const mpz_class& a, const mpz_class& b) {
  mpz_class out;
  mpz_gcd(out.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return out;
}

mpz_class powm(const mpz_class& base, const mpz_class& exp, const mpz_class& mod) {
  mpz_class out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open key file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write key file: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write on key file: " + path.string());
}

void read_header(ByteReader& in, std::uint32_t magic, unsigned& key_bits) {
  if (in.u32() != magic) throw FormatError("bad key file magic");
  const std::uint8_t version = in.u8();
  if (version != kKeyFormatVersion) {
    throw FormatError("unsupported key format version " + std::to_string(version));
  }
  key_bits = in.u32();
}

}  // namespace

mpz_class L(const mpz_class& x, const mpz_class& n) {
  mpz_class out = x - 1;
  mpz_divexact(out.get_mpz_t(), out.get_mpz_t(), n.get_mpz_t());
  return out;
}

KeyPair keypair_from_primes(const mpz_class& p, const mpz_class& q) {
  if (p == q) throw GenerationError("p and q must be distinct");
  if (mpz_probab_prime_p(p.get_mpz_t(), kPrimalityRounds) == 0 ||
      mpz_probab_prime_p(q.get_mpz_t(), kPrimalityRounds) == 0) {
    throw GenerationError("p and q must be prime");
  }
  const mpz_class n = p * q;
  const mpz_class phi = (p - 1) * (q - 1);
  if (gcd(n, phi) != 1) throw GenerationError("gcd(pq, (p-1)(q-1)) != 1");

  mpz_class lambda;
  mpz_lcm(lambda.get_mpz_t(), mpz_class(p - 1).get_mpz_t(), mpz_class(q - 1).get_mpz_t());

  KeyPair keys;
  keys.pub.n = n;
  keys.pub.n_squared = n * n;
  keys.pub.g = n + 1;
  keys.pub.key_bits = static_cast<unsigned>(mpz_sizeinbase(n.get_mpz_t(), 2));
  keys.pub.key_id = bigint::fingerprint(n);

  const mpz_class u = L(powm(keys.pub.g, lambda, keys.pub.n_squared), n);
  mpz_class mu;
  if (mpz_invert(mu.get_mpz_t(), u.get_mpz_t(), n.get_mpz_t()) == 0) {
    throw GenerationError("L(g^lambda mod n^2) is not invertible mod n");
  }

  keys.priv.lambda = lambda;
  keys.priv.mu = mu;
  keys.priv.n = n;
  keys.priv.n_squared = keys.pub.n_squared;
  keys.priv.key_bits = keys.pub.key_bits;
  keys.priv.key_id = keys.pub.key_id;
  return keys;
}

KeyPair generate_keypair(unsigned key_bits, Rng& rng, unsigned min_key_bits) {
  if (key_bits < min_key_bits) {
    throw UsageError("key_bits " + std::to_string(key_bits) + " below minimum " +
                     std::to_string(min_key_bits));
  }
  const unsigned p_bits = key_bits / 2;
  const unsigned q_bits = key_bits - p_bits;
  for (int attempt = 0; attempt < kPairAttempts; ++attempt) {
    const mpz_class p = random_prime(p_bits, rng);
    const mpz_class q = random_prime(q_bits, rng);
    if (p == q) continue;
    const mpz_class n = p * q;
    if (mpz_sizeinbase(n.get_mpz_t(), 2) != key_bits) continue;
    if (gcd(n, (p - 1) * (q - 1)) != 1) continue;
    return keypair_from_primes(p, q);
  }
  throw GenerationError("no admissible prime pair within attempt budget");
}

void check_key(const PublicKey& pk, const Ciphertext& c) {
  if (c.key_id != pk.key_id) throw KeyError("ciphertext bound to a different public key");
}

mpz_class sample_nonce(const PublicKey& pk, Rng& rng) {
  for (;;) {
    mpz_class r = bigint::random_below(rng, pk.n);
    if (r != 0 && gcd(r, pk.n) == 1) return r;
  }
}

Ciphertext encrypt_with_nonce(const PublicKey& pk, const mpz_class& m, const mpz_class& r) {
  if (m < 0 || m >= pk.n) throw DomainError("plaintext outside [0, n)");
  if (r <= 0 || r >= pk.n || gcd(r, pk.n) != 1) throw DomainError("nonce must lie in Z*_n");
  // g^m = (n+1)^m = 1 + m*n (mod n^2)
  mpz_class gm = (1 + m * pk.n) % pk.n_squared;
  mpz_class c = gm * powm(r, pk.n, pk.n_squared);
  c %= pk.n_squared;
  return {std::move(c), pk.key_id};
}

Ciphertext encrypt(const PublicKey& pk, const mpz_class& m, Rng& rng) {
  if (m < 0 || m >= pk.n) throw DomainError("plaintext outside [0, n)");
  return encrypt_with_nonce(pk, m, sample_nonce(pk, rng));
}

mpz_class decrypt(const PrivateKey& sk, const Ciphertext& c) {
  if (c.key_id != sk.key_id) throw KeyError("ciphertext bound to a different key");
  if (c.value <= 0 || c.value >= sk.n_squared || gcd(c.value, sk.n) != 1) {
    throw DecryptionError("ciphertext value not in Z*_{n^2}");
  }
  mpz_class m = L(powm(c.value, sk.lambda, sk.n_squared), sk.n) * sk.mu;
  m %= sk.n;
  return m;
}

Ciphertext add_cipher(const PublicKey& pk, const Ciphertext& c1, const Ciphertext& c2) {
  check_key(pk, c1);
  check_key(pk, c2);
  mpz_class v = c1.value * c2.value;
  v %= pk.n_squared;
  return {std::move(v), pk.key_id};
}

Ciphertext scalar_mul(const PublicKey& pk, const Ciphertext& c, const mpz_class& k) {
  check_key(pk, c);
  if (k < 0 || k >= pk.n) throw DomainError("scalar outside [0, n)");
  const mpz_class half = pk.n >> 1;
  if (k > half) {
    mpz_class inv;
    if (mpz_invert(inv.get_mpz_t(), c.value.get_mpz_t(), pk.n_squared.get_mpz_t()) == 0) {
      throw DomainError("ciphertext not invertible mod n^2");
    }
    return {powm(inv, pk.n - k, pk.n_squared), pk.key_id};
  }
  return {powm(c.value, k, pk.n_squared), pk.key_id};
}

std::vector<std::uint8_t> serialize(const PublicKey& pk) {
  ByteWriter out;
  out.u32(kPublicMagic);
  out.u8(kKeyFormatVersion);
  out.u32(pk.key_bits);
  out.integer(pk.n);
  out.integer(pk.g);
  return std::move(out).take();
}

std::vector<std::uint8_t> serialize(const PrivateKey& sk) {
  ByteWriter out;
  out.u32(kPrivateMagic);
  out.u8(kKeyFormatVersion);
  out.u32(sk.key_bits);
  out.integer(sk.lambda);
  out.integer(sk.mu);
  out.integer(sk.n);
  return std::move(out).take();
}

PublicKey deserialize_public(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  PublicKey pk;
  read_header(in, kPublicMagic, pk.key_bits);
  pk.n = in.integer();
  pk.g = in.integer();
  in.expect_end();
  if (pk.n < 2) throw FormatError("public modulus too small");
  pk.n_squared = pk.n * pk.n;
  pk.key_id = bigint::fingerprint(pk.n);
  return pk;
}

PrivateKey deserialize_private(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  PrivateKey sk;
  read_header(in, kPrivateMagic, sk.key_bits);
  sk.lambda = in.integer();
  sk.mu = in.integer();
  sk.n = in.integer();
  in.expect_end();
  if (sk.n < 2) throw FormatError("private modulus too small");
  sk.n_squared = sk.n * sk.n;
  sk.key_id = bigint::fingerprint(sk.n);
  return sk;
}

void write_key_files(const KeyPair& keys, const std::filesystem::path& stem) {
  write_file(std::filesystem::path(stem.string() + ".pub"), serialize(keys.pub));
  write_file(std::filesystem::path(stem.string() + ".key"), serialize(keys.priv));
}

PublicKey read_public_key(const std::filesystem::path& path) {
  return deserialize_public(read_file(path));
}

PrivateKey read_private_key(const std::filesystem::path& path) {
  return deserialize_private(read_file(path));
}

}  // namespace relcheck::paillier
