#pragma once

// Weight similarity: cosine similarity between the initiator's and a
// participant's flat weight vectors, computed without revealing either.
//
//   initiator:   E(w_so)             w_so = W_o / |W_o|
//   server:      E(w_so * l)         fresh secret integer blind l
//   participant: E(S * l) = prod_i E(w_so_i * l)^{enc(w_sp_i)}, decrypted to S * l
//   server:      S = (S * l) / l

#include <cstdint>
#include <span>
#include <vector>

#include "relcheck/fixed_point.hpp"
#include "relcheck/he_kernels.hpp"
#include "relcheck/paillier.hpp"
#include "relcheck/random.hpp"

namespace relcheck::similarity {

inline constexpr unsigned kDefaultBlindBits = 20;
inline constexpr double kUnitNormTolerance = 1e-9;

struct SimilarityComponent {
  std::vector<double> values;  // unit L2 norm
};

struct BlindedComponent {
  kernels::CipherVector ciphers;
};

// Server-secret integer blind in [2, 2^blind_bits).
class BlindingFactor {
 public:
  // Throws DomainError when l is 0 or 1 or does not fit blind_bits.
  BlindingFactor(std::uint64_t l, unsigned blind_bits = kDefaultBlindBits);

  std::uint64_t value() const { return l_; }

 private:
  std::uint64_t l_;
};

BlindingFactor sample_blinding_factor(Rng& rng, unsigned blind_bits = kDefaultBlindBits);

struct SimilarityScore {
  double value = 0.0;
};

// W / |W|_2. Throws DegenerateWeightsError for a zero vector.
SimilarityComponent normalize_weights(std::span<const double> weights);

// sum_i u_i v_i / (|U| |V|). Throws DimensionError on length mismatch and
// DegenerateWeightsError when either vector is zero.
SimilarityScore plaintext_cosine(std::span<const double> u, std::span<const double> v);

// Element-wise level-1 encryption of the component.
kernels::CipherVector encrypt_component(const paillier::PublicKey& pk, const SimilarityComponent& comp,
                                        const FixedPointCodec& codec, Rng& rng);

// Element i becomes E(enc(w_so_i) * l).
BlindedComponent blind_component(const paillier::PublicKey& pk, std::span<const paillier::Ciphertext> ciphers,
                                 const BlindingFactor& l);

// prod_i blinded_i^{enc(w_sp_i)}: a level-2 encryption of S_cos * l. Throws
// RangeError when the level-2 overflow budget does not hold for this key.
paillier::Ciphertext compute_blinded_score(const paillier::PublicKey& pk, const BlindedComponent& blinded,
                                           const SimilarityComponent& w_sp, const FixedPointCodec& codec,
                                           unsigned blind_bits = kDefaultBlindBits);

// Decrypts and decodes at level 2, giving the real value S_cos * l.
double open_blinded_score(const paillier::PrivateKey& sk, const paillier::Ciphertext& c,
                          const FixedPointCodec& codec);

SimilarityScore unblind(double blinded_score, const BlindingFactor& l);

}  // namespace relcheck::similarity
