#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "relcheck/bigint.hpp"
#include "relcheck/errors.hpp"
#include "relcheck/paillier.hpp"
#include "relcheck/random.hpp"

using namespace relcheck;
using namespace relcheck::paillier;

namespace {

// Square-and-multiply on native integers, independent of GMP.
std::uint64_t modexp(std::uint64_t base, std::uint64_t exp, std::uint64_t mod) {
  unsigned __int128 result = 1;
  unsigned __int128 b = base % mod;
  while (exp > 0) {
    if (exp & 1) result = (result * b) % mod;
    b = (b * b) % mod;
    exp >>= 1;
  }
  return static_cast<std::uint64_t>(result);
}

const KeyPair& key256() {
  static const KeyPair k = [] {
    Rng rng(256);
    return generate_keypair(256, rng);
  }();
  return k;
}

}  // namespace

TEST(PaillierToyKey, MatchesHandComputation) {
  const KeyPair k = keypair_from_primes(5, 7);
  EXPECT_EQ(k.pub.n, 35);
  EXPECT_EQ(k.pub.n_squared, 1225);
  EXPECT_EQ(k.pub.g, 36);
  EXPECT_EQ(k.priv.lambda, 12);  // lcm(4, 6)
  // 36^12 = (1 + 35)^12 = 1 + 12*35 mod 1225 = 421, L = 12, 12^-1 mod 35 = 3.
  EXPECT_EQ(k.priv.mu, 3);
}

TEST(PaillierToyKey, EncryptionMatchesManualModexp) {
  const KeyPair k = keypair_from_primes(5, 7);
  const Ciphertext c = encrypt_with_nonce(k.pub, 3, 2);
  const std::uint64_t expected = (modexp(36, 3, 1225) * modexp(2, 35, 1225)) % 1225;
  EXPECT_EQ(c.value, static_cast<unsigned long>(expected));
  EXPECT_EQ(decrypt(k.priv, c), 3);
}

TEST(PaillierToyKey, EveryMessageAndNonceRoundTrips) {
  const KeyPair k = keypair_from_primes(5, 7);
  for (int m = 0; m < 35; ++m) {
    for (int r = 1; r < 35; ++r) {
      if (std::gcd(r, 35) != 1) continue;
      ASSERT_EQ(decrypt(k.priv, encrypt_with_nonce(k.pub, m, r)), m) << "m=" << m << " r=" << r;
    }
  }
}

TEST(PaillierToyKey, SixBitGenerationWithLoweredMinimum) {
  Rng rng(1);
  const KeyPair k = generate_keypair(6, rng, 6);
  EXPECT_EQ(k.pub.n, 35);
}

TEST(Paillier, BelowMinimumKeySizeIsUsageError) {
  Rng rng(1);
  EXPECT_THROW(generate_keypair(32, rng), UsageError);
}

TEST(Paillier, ModulusHasRequestedWidth) {
  for (unsigned bits : {64u, 128u, 256u}) {
    Rng rng(bits);
    const KeyPair k = generate_keypair(bits, rng);
    EXPECT_EQ(mpz_sizeinbase(k.pub.n.get_mpz_t(), 2), bits);
    EXPECT_EQ(k.pub.n_squared, k.pub.n * k.pub.n);
    EXPECT_EQ(k.pub.g, k.pub.n + 1);
  }
}

TEST(Paillier, GenerationIsDeterministicUnderSeed) {
  Rng a(77);
  Rng b(77);
  EXPECT_EQ(serialize(generate_keypair(128, a).priv), serialize(generate_keypair(128, b).priv));
}

TEST(Paillier, HomomorphicLaws) {
  const auto& k = key256();
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const mpz_class m1 = bigint::random_below(rng, k.pub.n);
    const mpz_class m2 = bigint::random_below(rng, k.pub.n);
    const mpz_class s = bigint::random_below(rng, k.pub.n);
    const auto c1 = encrypt(k.pub, m1, rng);
    const auto c2 = encrypt(k.pub, m2, rng);
    ASSERT_EQ(decrypt(k.priv, c1), m1);
    mpz_class sum = (m1 + m2) % k.pub.n;
    ASSERT_EQ(decrypt(k.priv, add_cipher(k.pub, c1, c2)), sum);
    mpz_class prod = (m1 * s) % k.pub.n;
    ASSERT_EQ(decrypt(k.priv, scalar_mul(k.pub, c1, s)), prod);
  }
}

TEST(Paillier, ScalarMulNegativeResidue) {
  const auto& k = key256();
  Rng rng(2);
  const auto c = encrypt(k.pub, 1000, rng);
  const mpz_class minus_three = k.pub.n - 3;
  EXPECT_EQ(decrypt(k.priv, scalar_mul(k.pub, c, minus_three)), k.pub.n - 3000);
}

TEST(Paillier, EncryptionIsRandomized) {
  const auto& k = key256();
  Rng rng(4);
  EXPECT_NE(encrypt(k.pub, 5, rng).value, encrypt(k.pub, 5, rng).value);
}

TEST(Paillier, NonceIsUnit) {
  const auto& k = key256();
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    const mpz_class r = sample_nonce(k.pub, rng);
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), r.get_mpz_t(), k.pub.n.get_mpz_t());
    EXPECT_EQ(g, 1);
    EXPECT_GT(r, 0);
    EXPECT_LT(r, k.pub.n);
  }
}

TEST(Paillier, ForeignCiphertextRejected) {
  const auto& k = key256();
  Rng rng(5);
  const KeyPair other = generate_keypair(128, rng);
  const auto c = encrypt(other.pub, 1, rng);
  EXPECT_THROW(decrypt(k.priv, c), Error);
  EXPECT_THROW(add_cipher(k.pub, c, c), KeyError);
}

TEST(Paillier, OutOfGroupCiphertextRejected) {
  const auto& k = key256();
  Ciphertext c{0, k.pub.key_id};
  EXPECT_THROW(decrypt(k.priv, c), DecryptionError);
  c.value = k.pub.n_squared;
  EXPECT_THROW(decrypt(k.priv, c), DecryptionError);
  c.value = k.pub.n;  // shares a factor with n
  EXPECT_THROW(decrypt(k.priv, c), DecryptionError);
}

TEST(Paillier, InvalidPrimesRejected) {
  EXPECT_THROW(keypair_from_primes(7, 7), GenerationError);
  EXPECT_THROW(keypair_from_primes(9, 7), GenerationError);
}

TEST(Paillier, LDividesExactly) {
  EXPECT_EQ(L(421, 35), 12);
}

TEST(PaillierKeyFiles, SerializationRoundTrip) {
  const auto& k = key256();
  const auto pub = deserialize_public(serialize(k.pub));
  const auto priv = deserialize_private(serialize(k.priv));
  EXPECT_EQ(pub, k.pub);
  EXPECT_EQ(priv, k.priv);
  EXPECT_EQ(pub.key_id, k.pub.key_id);
  EXPECT_EQ(priv.key_id, k.priv.key_id);
}

TEST(PaillierKeyFiles, CorruptInputIsFormatError) {
  auto bytes = serialize(key256().pub);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_THROW(deserialize_public(truncated), FormatError);
  auto bad_magic = bytes;
  bad_magic[0] ^= 0xFF;
  EXPECT_THROW(deserialize_public(bad_magic), FormatError);
  EXPECT_THROW(deserialize_private(bytes), FormatError);  // public bytes are not a private key
}

TEST(PaillierKeyFiles, FilesSeparatePublicAndPrivate) {
  const auto dir = std::filesystem::temp_directory_path() / "relcheck_keyfiles";
  std::filesystem::create_directories(dir);
  const auto stem = dir / "k";
  write_key_files(key256(), stem);
  const auto pub = read_public_key(stem.string() + ".pub");
  const auto priv = read_private_key(stem.string() + ".key");
  EXPECT_EQ(pub, key256().pub);
  EXPECT_EQ(priv, key256().priv);

  // The public file holds no private integer.
  std::ifstream in(stem.string() + ".pub", std::ios::binary);
  const std::string pub_bytes((std::istreambuf_iterator<char>(in)), {});
  const auto lam = bigint::to_bytes(key256().priv.lambda);
  EXPECT_EQ(pub_bytes.find(std::string(lam.begin(), lam.end())), std::string::npos);

  Rng rng(3);
  const auto c = encrypt(pub, 42, rng);
  EXPECT_EQ(decrypt(priv, c), 42);
  std::filesystem::remove_all(dir);
}
