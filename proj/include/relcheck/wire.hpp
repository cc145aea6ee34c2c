#pragma once

// Round messages exchanged between the initiator, the server and the
// participants, plus their binary wire format.
//
// Layout (all integers big-endian):
//   u8  format version (kWireVersion)
//   u8  message tag
//   u32 round index
//   u32 sender id
//   u64 key id of every ciphertext in the payload
//   payload, per tag:
//     InitParams        cipher vector
//     GlobalParams      cipher vector, u32 included_count
//     InitiatorUpdate   cipher vector (weights), cipher vector (component)
//     BlindChallenge    cipher vector
//     ParticipantUpdate cipher vector, f64 blinded score (IEEE-754 bits)
//   cipher vector = u32 count, then count x (u32 byte length, magnitude bytes)
//
// Encoding is deterministic, so equal messages produce equal bytes.

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "relcheck/he_kernels.hpp"

namespace relcheck::wire {

inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::uint32_t kServerId = 0xFFFFFFFFu;
inline constexpr std::uint32_t kInitiatorId = 0;

enum class MessageTag : std::uint8_t {
  kInitParams = 1,
  kGlobalParams = 2,
  kInitiatorUpdate = 3,
  kBlindChallenge = 4,
  kParticipantUpdate = 5,
};

std::string to_string(MessageTag tag);

struct InitParams {
  kernels::CipherVector weights;  // E(W_init)
};

struct GlobalParams {
  kernels::CipherVector weights;    // E(W_add), or E(W_upd) when the server divides itself
  std::uint32_t included_count = 1; // divisor applied after decryption
};

struct InitiatorUpdate {
  kernels::CipherVector weights;    // E(W_o)
  kernels::CipherVector component;  // E(W_so)
};

struct BlindChallenge {
  kernels::CipherVector blinded;  // E(W_so * l)
};

struct ParticipantUpdate {
  kernels::CipherVector weights;  // E(W_p)
  double blinded_score = 0.0;     // S_cos * l
};

using Payload = std::variant<InitParams, GlobalParams, InitiatorUpdate, BlindChallenge, ParticipantUpdate>;

struct RoundMessage {
  std::uint32_t round = 0;
  std::uint32_t sender = 0;
  std::uint64_t key_id = 0;
  Payload payload;

  MessageTag tag() const;

  template <typename T>
  const T& as() const;
};

std::vector<std::uint8_t> encode(const RoundMessage& msg);

// Throws FormatError on unknown versions/tags or malformed payloads.
RoundMessage decode(std::span<const std::uint8_t> bytes);

}  // namespace relcheck::wire
