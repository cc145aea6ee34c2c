#include "relcheck/similarity.hpp"

#include <cmath>
#include <string>

#include "relcheck/errors.hpp"

namespace relcheck::similarity {
namespace {

double l2_norm(std::span<const double> v) {
  double total = 0.0;
  for (double x : v) total += x * x;
  return std::sqrt(total);
}

}  // namespace

BlindingFactor::BlindingFactor(std::uint64_t l, unsigned blind_bits) : l_(l) {
  if (blind_bits < 2 || blind_bits > 62) throw DomainError("blind_bits must lie in [2, 62]");
  if (l < 2 || l >= (std::uint64_t{1} << blind_bits)) {
    throw DomainError("blinding factor " + std::to_string(l) + " outside [2, 2^" + std::to_string(blind_bits) + ")");
  }
}

BlindingFactor sample_blinding_factor(Rng& rng, unsigned blind_bits) {
  if (blind_bits < 2 || blind_bits > 62) throw DomainError("blind_bits must lie in [2, 62]");
  std::uniform_int_distribution<std::uint64_t> dist(2, (std::uint64_t{1} << blind_bits) - 1);
  return BlindingFactor(dist(rng), blind_bits);
}

SimilarityComponent normalize_weights(std::span<const double> weights) {
  const double norm = l2_norm(weights);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw DegenerateWeightsError("weight vector has zero or non-finite norm");
  SimilarityComponent out;
  out.values.reserve(weights.size());
  for (double w : weights) out.values.push_back(w / norm);
  return out;
}

SimilarityScore plaintext_cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DimensionError("cosine of vectors with different lengths");
  const double nu = l2_norm(u);
  const double nv = l2_norm(v);
  if (!(nu > 0.0) || !(nv > 0.0)) throw DegenerateWeightsError("cosine of a zero vector");
  double total = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) total += (u[i] / nu) * (v[i] / nv);
  return {total};
}

kernels::CipherVector encrypt_component(const paillier::PublicKey& pk, const SimilarityComponent& comp,
                                        const FixedPointCodec& codec, Rng& rng) {
  const auto encoded = kernels::encode_all(codec, comp.values);
  return kernels::parallel::encrypt(pk, encoded, rng());
}

BlindedComponent blind_component(const paillier::PublicKey& pk, std::span<const paillier::Ciphertext> ciphers,
                                 const BlindingFactor& l) {
  return {kernels::parallel::scale(pk, ciphers, mpz_class(static_cast<unsigned long>(l.value())))};
}

paillier::Ciphertext compute_blinded_score(const paillier::PublicKey& pk, const BlindedComponent& blinded,
                                           const SimilarityComponent& w_sp, const FixedPointCodec& codec,
                                           unsigned blind_bits) {
  if (blinded.ciphers.size() != w_sp.values.size()) {
    throw DimensionError("blinded component has " + std::to_string(blinded.ciphers.size()) +
                         " elements, local component has " + std::to_string(w_sp.values.size()));
  }
  check_overflow_budget(pk.n, w_sp.values.size(), codec.scale_bits(), blind_bits);
  const auto exponents = kernels::encode_all(codec, w_sp.values);
  return kernels::parallel::inner_product(pk, blinded.ciphers, exponents);
}

double open_blinded_score(const paillier::PrivateKey& sk, const paillier::Ciphertext& c,
                          const FixedPointCodec& codec) {
  return codec.decode(paillier::decrypt(sk, c), 2);
}

SimilarityScore unblind(double blinded_score, const BlindingFactor& l) {
  return {blinded_score / static_cast<double>(l.value())};
}

}  // namespace relcheck::similarity
