#pragma once

#include <cstdint>
#include <random>

namespace relcheck {

// Seedable source used for every random draw in the library. Reproducibility
// is the requirement here; this is not a CSPRNG.
using Rng = std::mt19937_64;

// Independent stream tags so crypto randomness never perturbs training.
enum class Stream : std::uint64_t {
  kData = 1,
  kInit = 2,
  kTrain = 3,
  kCrypto = 4,
  kNonce = 5,
  kBlind = 6,
  kKeygen = 7,
};

// Derives a child generator from (seed, stream, index) via seed_seq mixing.
inline Rng derive_rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

}  // namespace relcheck
