#include <gtest/gtest.h>

#include <cmath>

#include "relcheck/errors.hpp"
#include "relcheck/similarity.hpp"

using namespace relcheck;
using namespace relcheck::similarity;

namespace {

const paillier::KeyPair& keys() {
  static const paillier::KeyPair k = [] {
    Rng rng(17);
    return paillier::generate_keypair(256, rng);
  }();
  return k;
}

double secure_cosine(std::span<const double> u, std::span<const double> v, std::uint64_t l, Rng& rng) {
  const FixedPointCodec codec(keys().pub.n);
  const auto e = encrypt_component(keys().pub, normalize_weights(u), codec, rng);
  const BlindingFactor blind(l);
  const auto blinded = blind_component(keys().pub, e, blind);
  const auto c = compute_blinded_score(keys().pub, blinded, normalize_weights(v), codec);
  return unblind(open_blinded_score(keys().priv, c, codec), blind).value;
}

}  // namespace

TEST(Similarity, NormalizeGivesUnitVector) {
  const std::vector<double> w = {3.0, -4.0};
  const auto c = normalize_weights(w);
  EXPECT_DOUBLE_EQ(c.values[0], 0.6);
  EXPECT_DOUBLE_EQ(c.values[1], -0.8);
  EXPECT_THROW(normalize_weights(std::vector<double>{0.0, 0.0}), DegenerateWeightsError);
}

TEST(Similarity, PlaintextCosineKnownValues) {
  const std::vector<double> a = {1, 0};
  const std::vector<double> b = {0, 2};
  const std::vector<double> c = {-3, 0};
  const std::vector<double> d = {1, 1};
  EXPECT_DOUBLE_EQ(plaintext_cosine(a, a).value, 1.0);
  EXPECT_DOUBLE_EQ(plaintext_cosine(a, b).value, 0.0);
  EXPECT_DOUBLE_EQ(plaintext_cosine(a, c).value, -1.0);
  EXPECT_NEAR(plaintext_cosine(a, d).value, 1 / std::sqrt(2.0), 1e-15);
  EXPECT_THROW(plaintext_cosine(a, std::vector<double>{1, 2, 3}), DimensionError);
}

TEST(Similarity, BlindingFactorRange) {
  EXPECT_THROW(BlindingFactor(0), DomainError);
  EXPECT_THROW(BlindingFactor(1), DomainError);
  EXPECT_THROW(BlindingFactor(1u << 20, 20), DomainError);
  EXPECT_NO_THROW(BlindingFactor((1u << 20) - 1, 20));
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const auto l = sample_blinding_factor(rng).value();
    ASSERT_GE(l, 2u);
    ASSERT_LT(l, 1u << 20);
  }
}

TEST(Similarity, SecureScoreMatchesPlaintext) {
  Rng rng(5);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (std::size_t f : {5u, 50u, 200u}) {
    std::vector<double> u(f);
    std::vector<double> v(f);
    for (auto& x : u) x = dist(rng);
    for (auto& x : v) x = dist(rng);
    const double want = plaintext_cosine(u, v).value;
    EXPECT_NEAR(secure_cosine(u, v, 777777, rng), want, 1e-6) << "F=" << f;
  }
}

TEST(Similarity, IdenticalAndOppositeVectors) {
  Rng rng(6);
  const std::vector<double> u = {0.1, -2.0, 3.5, 0.0, 7.0};
  std::vector<double> neg(u);
  for (auto& x : neg) x = -x;
  EXPECT_NEAR(secure_cosine(u, u, 2, rng), 1.0, 1e-6);
  EXPECT_NEAR(secure_cosine(u, neg, (1u << 20) - 1, rng), -1.0, 1e-6);
}

TEST(Similarity, BlindedScoreHidesScoreScale) {
  // The participant only sees S * l.
  Rng rng(7);
  const FixedPointCodec codec(keys().pub.n);
  const std::vector<double> u = {1, 2, 3};
  const auto e = encrypt_component(keys().pub, normalize_weights(u), codec, rng);
  const BlindingFactor blind(1000);
  const auto c = compute_blinded_score(keys().pub, blind_component(keys().pub, e, blind),
                                       normalize_weights(u), codec);
  EXPECT_NEAR(open_blinded_score(keys().priv, c, codec), 1000.0, 1e-3);
}

TEST(Similarity, DimensionMismatch) {
  Rng rng(8);
  const FixedPointCodec codec(keys().pub.n);
  const auto e = encrypt_component(keys().pub, normalize_weights(std::vector<double>{1, 2, 3}), codec, rng);
  const auto blinded = blind_component(keys().pub, e, BlindingFactor(5));
  EXPECT_THROW(compute_blinded_score(keys().pub, blinded, normalize_weights(std::vector<double>{1, 2}), codec),
               DimensionError);
}

TEST(Similarity, OverflowBudgetEnforced) {
  Rng rng(9);
  const auto small = paillier::generate_keypair(64, rng);
  const FixedPointCodec codec(small.pub.n, 32);
  const auto comp = normalize_weights(std::vector<double>{1, 2, 3});
  const auto e = encrypt_component(small.pub, comp, codec, rng);
  const auto blinded = blind_component(small.pub, e, BlindingFactor(5));
  EXPECT_THROW(compute_blinded_score(small.pub, blinded, comp, codec, 20), RangeError);
}
