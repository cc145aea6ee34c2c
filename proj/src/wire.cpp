#include "relcheck/wire.hpp"

#include "relcheck/byte_io.hpp"
#include "relcheck/errors.hpp"

namespace relcheck::wire {
namespace {

void put_vector(ByteWriter& out, const kernels::CipherVector& v) {
  out.u32(static_cast<std::uint32_t>(v.size()));
  for (const auto& c : v) out.integer(c.value);
}

kernels::CipherVector get_vector(ByteReader& in, std::uint64_t key_id) {
  const std::uint32_t count = in.u32();
  // Each element needs at least its 4-byte length prefix.
  if (count > in.remaining() / 4) throw FormatError("cipher vector length exceeds payload");
  kernels::CipherVector v;
  v.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) v.push_back({in.integer(), key_id});
  return v;
}

}  // namespace

std::string to_string(MessageTag tag) {
  switch (tag) {
    case MessageTag::kInitParams: return "InitParams";
    case MessageTag::kGlobalParams: return "GlobalParams";
    case MessageTag::kInitiatorUpdate: return "InitiatorUpdate";
    case MessageTag::kBlindChallenge: return "BlindChallenge";
    case MessageTag::kParticipantUpdate: return "ParticipantUpdate";
  }
  return "Unknown";
}

MessageTag RoundMessage::tag() const {
  return static_cast<MessageTag>(payload.index() + 1);
}

template <typename T>
const T& RoundMessage::as() const {
  const T* p = std::get_if<T>(&payload);
  if (p == nullptr) throw ProtocolOrderError("unexpected message type " + to_string(tag()));
  return *p;
}

template const InitParams& RoundMessage::as<InitParams>() const;
template const GlobalParams& RoundMessage::as<GlobalParams>() const;
template const InitiatorUpdate& RoundMessage::as<InitiatorUpdate>() const;
template const BlindChallenge& RoundMessage::as<BlindChallenge>() const;
template const ParticipantUpdate& RoundMessage::as<ParticipantUpdate>() const;

std::vector<std::uint8_t> encode(const RoundMessage& msg) {
  ByteWriter out;
  out.u8(kWireVersion);
  out.u8(static_cast<std::uint8_t>(msg.tag()));
  out.u32(msg.round);
  out.u32(msg.sender);
  out.u64(msg.key_id);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, InitParams>) {
          put_vector(out, p.weights);
        } else if constexpr (std::is_same_v<T, GlobalParams>) {
          put_vector(out, p.weights);
          out.u32(p.included_count);
        } else if constexpr (std::is_same_v<T, InitiatorUpdate>) {
          put_vector(out, p.weights);
          put_vector(out, p.component);
        } else if constexpr (std::is_same_v<T, BlindChallenge>) {
          put_vector(out, p.blinded);
        } else {
          put_vector(out, p.weights);
          out.f64(p.blinded_score);
        }
      },
      msg.payload);
  return std::move(out).take();
}

RoundMessage decode(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  const std::uint8_t version = in.u8();
  if (version != kWireVersion) throw FormatError("unsupported wire version " + std::to_string(version));
  const std::uint8_t tag = in.u8();
  RoundMessage msg;
  msg.round = in.u32();
  msg.sender = in.u32();
  msg.key_id = in.u64();
  switch (static_cast<MessageTag>(tag)) {
    case MessageTag::kInitParams:
      msg.payload = InitParams{get_vector(in, msg.key_id)};
      break;
    case MessageTag::kGlobalParams: {
      GlobalParams g;
      g.weights = get_vector(in, msg.key_id);
      g.included_count = in.u32();
      if (g.included_count == 0) throw FormatError("GlobalParams with zero included_count");
      msg.payload = std::move(g);
      break;
    }
    case MessageTag::kInitiatorUpdate: {
      InitiatorUpdate u;
      u.weights = get_vector(in, msg.key_id);
      u.component = get_vector(in, msg.key_id);
      msg.payload = std::move(u);
      break;
    }
    case MessageTag::kBlindChallenge:
      msg.payload = BlindChallenge{get_vector(in, msg.key_id)};
      break;
    case MessageTag::kParticipantUpdate: {
      ParticipantUpdate u;
      u.weights = get_vector(in, msg.key_id);
      u.blinded_score = in.f64();
      msg.payload = std::move(u);
      break;
    }
    default:
      throw FormatError("unknown message tag " + std::to_string(tag));
  }
  in.expect_end();
  return msg;
}

}  // namespace relcheck::wire
