#include <gtest/gtest.h>

#include "relcheck/bigint.hpp"
#include "relcheck/errors.hpp"
#include "relcheck/he_kernels.hpp"
#include "relcheck/random.hpp"

using namespace relcheck;
using namespace relcheck::kernels;

namespace {

struct Fixture {
  paillier::KeyPair keys;
  std::vector<mpz_class> a;
  std::vector<mpz_class> b;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture x;
    Rng rng(31);
    x.keys = paillier::generate_keypair(256, rng);
    for (int i = 0; i < 37; ++i) {
      x.a.push_back(bigint::random_below(rng, x.keys.pub.n));
      x.b.push_back(bigint::random_below(rng, x.keys.pub.n));
    }
    return x;
  }();
  return f;
}

}  // namespace

TEST(Kernels, EncryptIsDeterministicAndMatchesAcrossImplementations) {
  const auto& f = fixture();
  const auto s = serial::encrypt(f.keys.pub, f.a, 99);
  const auto p = parallel::encrypt(f.keys.pub, f.a, 99);
  EXPECT_EQ(s, p);
  EXPECT_EQ(s, serial::encrypt(f.keys.pub, f.a, 99));
  EXPECT_NE(s, serial::encrypt(f.keys.pub, f.a, 100));
}

TEST(Kernels, DecryptAddScaleMatchSerial) {
  const auto& f = fixture();
  const auto& pk = f.keys.pub;
  const auto ca = serial::encrypt(pk, f.a, 1);
  const auto cb = serial::encrypt(pk, f.b, 2);
  EXPECT_EQ(serial::decrypt(f.keys.priv, ca), f.a);
  EXPECT_EQ(parallel::decrypt(f.keys.priv, ca), f.a);

  const auto sum_s = serial::add(pk, ca, cb);
  EXPECT_EQ(sum_s, parallel::add(pk, ca, cb));
  const auto sums = serial::decrypt(f.keys.priv, sum_s);
  for (std::size_t i = 0; i < f.a.size(); ++i) {
    mpz_class want = (f.a[i] + f.b[i]) % pk.n;
    EXPECT_EQ(sums[i], want);
  }

  const mpz_class k = 12345;
  const auto scaled = serial::scale(pk, ca, k);
  EXPECT_EQ(scaled, parallel::scale(pk, ca, k));
  const auto prods = serial::decrypt(f.keys.priv, scaled);
  for (std::size_t i = 0; i < f.a.size(); ++i) {
    mpz_class want = (f.a[i] * k) % pk.n;
    EXPECT_EQ(prods[i], want);
  }
}

TEST(Kernels, InnerProduct) {
  const auto& f = fixture();
  const auto& pk = f.keys.pub;
  const auto ca = serial::encrypt(pk, f.a, 3);
  const auto s = serial::inner_product(pk, ca, f.b);
  EXPECT_EQ(s, parallel::inner_product(pk, ca, f.b));
  mpz_class want = 0;
  for (std::size_t i = 0; i < f.a.size(); ++i) want += f.a[i] * f.b[i];
  want %= pk.n;
  EXPECT_EQ(paillier::decrypt(f.keys.priv, s), want);
}

TEST(Kernels, LengthMismatchIsDimensionError) {
  const auto& f = fixture();
  const auto ca = serial::encrypt(f.keys.pub, f.a, 3);
  const std::span<const paillier::Ciphertext> shorter(ca.data(), ca.size() - 1);
  EXPECT_THROW(serial::add(f.keys.pub, ca, shorter), DimensionError);
  EXPECT_THROW(parallel::add(f.keys.pub, ca, shorter), DimensionError);
  EXPECT_THROW(parallel::inner_product(f.keys.pub, shorter, f.b), DimensionError);
}

TEST(Kernels, EncodeDecodeAll) {
  const auto& f = fixture();
  const FixedPointCodec codec(f.keys.pub.n);
  const std::vector<double> xs = {0.0, 1.0, -2.5, 1e-3, -7.125};
  const auto enc = encode_all(codec, xs);
  const auto dec = decode_all(codec, enc);
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(dec[i], xs[i], codec.resolution());
  EXPECT_GE(max_threads(), 1);
}
