#include <gtest/gtest.h>

#include "relcheck/errors.hpp"
#include "relcheck/wire.hpp"

using namespace relcheck;
using namespace relcheck::wire;

namespace {

kernels::CipherVector ciphers(std::initializer_list<unsigned long> values, std::uint64_t key_id) {
  kernels::CipherVector out;
  for (auto v : values) out.push_back({mpz_class(v), key_id});
  return out;
}

RoundMessage sample(Payload p) { return RoundMessage{7, 3, 0xABCDEF, std::move(p)}; }

void expect_round_trip(const RoundMessage& m) {
  const auto bytes = encode(m);
  const auto back = decode(bytes);
  EXPECT_EQ(back.round, m.round);
  EXPECT_EQ(back.sender, m.sender);
  EXPECT_EQ(back.key_id, m.key_id);
  EXPECT_EQ(back.tag(), m.tag());
  EXPECT_EQ(encode(back), bytes);
}

}  // namespace

TEST(Wire, EveryMessageRoundTrips) {
  expect_round_trip(sample(InitParams{ciphers({1, 2, 3}, 0xABCDEF)}));
  expect_round_trip(sample(GlobalParams{ciphers({0, 99}, 0xABCDEF), 3}));
  expect_round_trip(sample(InitiatorUpdate{ciphers({5}, 0xABCDEF), ciphers({6, 7}, 0xABCDEF)}));
  expect_round_trip(sample(BlindChallenge{ciphers({}, 0xABCDEF)}));
  expect_round_trip(sample(ParticipantUpdate{ciphers({123456789}, 0xABCDEF), -1234.5}));
}

TEST(Wire, PayloadContentsSurvive) {
  const auto m = sample(ParticipantUpdate{ciphers({42, 0, 1ul << 40}, 0xABCDEF), 0.1});
  const auto back = decode(encode(m));
  const auto& u = back.as<ParticipantUpdate>();
  EXPECT_EQ(u.weights, m.as<ParticipantUpdate>().weights);
  EXPECT_EQ(u.blinded_score, 0.1);
  const auto g = decode(encode(sample(GlobalParams{ciphers({9}, 0xABCDEF), 5}))).as<GlobalParams>();
  EXPECT_EQ(g.included_count, 5u);
}

TEST(Wire, HeaderLayout) {
  const auto bytes = encode(RoundMessage{0x01020304, 0x0A0B0C0D, 0x1122334455667788ULL, InitParams{}});
  const std::vector<std::uint8_t> head = {kWireVersion, 1, 1, 2, 3, 4, 0x0A, 0x0B, 0x0C, 0x0D,
                                          0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88, 0, 0, 0, 0};
  EXPECT_EQ(bytes, head);
}

TEST(Wire, MalformedBytesAreFormatErrors) {
  auto bytes = encode(sample(InitParams{ciphers({1, 2}, 0xABCDEF)}));
  auto bad_version = bytes;
  bad_version[0] = 9;
  EXPECT_THROW(decode(bad_version), FormatError);
  auto bad_tag = bytes;
  bad_tag[1] = 77;
  EXPECT_THROW(decode(bad_tag), FormatError);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(decode(truncated), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode(trailing), FormatError);
  EXPECT_THROW(decode(std::vector<std::uint8_t>{}), FormatError);
  auto zero_count = encode(sample(GlobalParams{ciphers({1}, 0xABCDEF), 1}));
  zero_count.back() = 0;
  EXPECT_THROW(decode(zero_count), FormatError);
}

TEST(Wire, WrongPayloadTypeRejected) {
  const auto m = sample(InitParams{});
  EXPECT_THROW(m.as<GlobalParams>(), ProtocolOrderError);
  EXPECT_NO_THROW(m.as<InitParams>());
}

TEST(Wire, TagNames) {
  EXPECT_EQ(to_string(MessageTag::kBlindChallenge), "BlindChallenge");
}
