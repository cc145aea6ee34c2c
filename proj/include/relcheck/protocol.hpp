#pragma once

// The three protocol roles and the server's participant channel.
//
// Round r (r >= 1):
//   1. every party downloads GlobalParams(r-1) and trains locally
//   2. initiator -> server: InitiatorUpdate{E(W_o), E(W_so)}
//   3. server -> participants: BlindChallenge{E(W_so * l)}, fresh l per round
//   4. participant -> server: ParticipantUpdate{E(W_p), S_cos * l}
//   5. server keeps participants with T < S_cos <= 1 and publishes
//      GlobalParams{E(W_o + sum W_p), P + 1}
//
// Roles only exchange wire-encoded messages. The server holds the public key
// alone; the shared private key lives in the parties.

#include <chrono>
#include <cstdint>
#include <functional>
#include <future>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "relcheck/dataset.hpp"
#include "relcheck/fixed_point.hpp"
#include "relcheck/ml.hpp"
#include "relcheck/paillier.hpp"
#include "relcheck/random.hpp"
#include "relcheck/similarity.hpp"
#include "relcheck/wire.hpp"

namespace relcheck::protocol {

using Bytes = std::vector<std::uint8_t>;

// Scores may exceed 1 by quantization error only.
inline constexpr double kScoreUpperSlack = 1e-6;

struct ThresholdSchedule {
  enum class Mode { kFixed, kStepped };

  Mode mode = Mode::kFixed;
  double fixed = 0.05;
  double start = 0.1;
  double end = 0.7;
  double step = 0.1;
  std::uint32_t rounds_per_step = 100;

  static ThresholdSchedule fixed_at(double t);
  static ThresholdSchedule stepped(double start, double end, double step, std::uint32_t rounds_per_step);

  // Threshold in force during round r (1-based).
  double at(std::uint32_t round) const;

  // Values must lie in [-1, 1); -1 disables filtering. Stepped schedules
  // must be nondecreasing.
  void validate() const;
};

// Acceptance window: T < score <= 1 (+ quantization slack).
bool passes_threshold(double score, double threshold);

// Decrypts a GlobalParams/InitParams message and divides by included_count.
std::vector<double> decode_global(const wire::RoundMessage& msg, const paillier::PrivateKey& sk,
                                  const FixedPointCodec& codec);

// Everything a key-holding party needs.
struct PartyConfig {
  std::uint32_t id = 0;
  std::string name;
  ml::ModelSpec spec;
  ml::TrainConfig train;
  Dataset data;
  paillier::PublicKey pk;
  paillier::PrivateKey sk;
  unsigned scale_bits = FixedPointCodec::kDefaultScaleBits;
  unsigned blind_bits = similarity::kDefaultBlindBits;
  std::uint64_t train_seed = 0;
  std::uint64_t crypto_seed = 0;
  std::uint64_t init_seed = 0;  // initiator only
};

struct InitiatorTiming {
  double train_s = 0.0;
  double encrypt_weights_s = 0.0;
  double encrypt_component_s = 0.0;
};

class ModelInitiator {
 public:
  explicit ModelInitiator(PartyConfig cfg);

  // Draws W_init and returns InitParams{E(W_init)}. Throws
  // ProtocolOrderError when called twice.
  wire::RoundMessage initiator_init();

  // Decrypts the global parameters (W_init itself in round 1), trains, and
  // returns InitiatorUpdate{E(W_o), E(W_o / |W_o|)}.
  wire::RoundMessage initiator_round(const wire::RoundMessage& global);

  const ml::ModelParams& local_params() const { return params_; }
  const ml::ModelParams& initial_params() const { return initial_; }
  const InitiatorTiming& last_timing() const { return timing_; }
  const PartyConfig& config() const { return cfg_; }

 private:
  PartyConfig cfg_;
  FixedPointCodec codec_;
  Rng train_rng_;
  Rng crypto_rng_;
  bool initialized_ = false;
  std::uint32_t round_ = 0;
  ml::ModelParams initial_;
  ml::ModelParams params_;
  InitiatorTiming timing_;
};

struct ParticipantBehavior {
  enum class Kind { kHonest, kRandomWeights, kStraggler };

  Kind kind = Kind::kHonest;
  double random_weight_scale = 1.0;  // stddev of fabricated weights
  std::chrono::milliseconds delay{0};

  static Kind parse(const std::string& name);
};

struct ParticipantTiming {
  double train_s = 0.0;
  double score_s = 0.0;  // homomorphic inner product + score decryption
  double encrypt_weights_s = 0.0;
};

class Participant {
 public:
  Participant(PartyConfig cfg, ParticipantBehavior behavior = {});

  // Download phase: decrypt global parameters and train to obtain W_p.
  void receive_global(const wire::RoundMessage& global);

  // Similarity phase: E(S_cos * l) from the challenge, decrypt it, and return
  // ParticipantUpdate{E(W_p), S_cos * l}.
  wire::RoundMessage respond(const wire::RoundMessage& challenge);

  wire::RoundMessage participant_round(const wire::RoundMessage& global, const wire::RoundMessage& challenge);

  const ml::ModelParams& local_params() const { return params_; }
  const ParticipantTiming& last_timing() const { return timing_; }
  const PartyConfig& config() const { return cfg_; }
  // Tag of every message this party has received, in order.
  const std::vector<wire::MessageTag>& received_log() const { return received_; }

 private:
  PartyConfig cfg_;
  ParticipantBehavior behavior_;
  FixedPointCodec codec_;
  Rng train_rng_;
  Rng crypto_rng_;
  Rng adversary_rng_;
  std::uint32_t round_ = 0;
  bool trained_ = false;
  ml::ModelParams params_;
  ParticipantTiming timing_;
  std::vector<wire::MessageTag> received_;
};

// Server-side view of the participants. exchange() delivers the challenge to
// every participant and returns one slot per participant (in participants()
// order); an empty slot means no reply arrived before the deadline.
class ParticipantChannel {
 public:
  virtual ~ParticipantChannel() = default;
  virtual std::vector<std::uint32_t> participants() const = 0;
  virtual std::vector<std::optional<Bytes>> exchange(const Bytes& challenge, std::chrono::milliseconds timeout) = 0;
};

// In-process channel over Participant objects. begin_round() starts every
// participant's download-and-train phase asynchronously.
class LocalChannel : public ParticipantChannel {
 public:
  explicit LocalChannel(std::vector<Participant*> parties);
  ~LocalChannel() override;

  void begin_round(const Bytes& global);
  // Joins outstanding work, including replies that missed the deadline.
  void finish_round();

  std::vector<std::uint32_t> participants() const override;
  std::vector<std::optional<Bytes>> exchange(const Bytes& challenge, std::chrono::milliseconds timeout) override;

 private:
  std::vector<Participant*> parties_;
  std::vector<std::shared_future<void>> training_;
  std::vector<std::future<Bytes>> replies_;
};

struct ServerConfig {
  ThresholdSchedule schedule;
  unsigned blind_bits = similarity::kDefaultBlindBits;
  // Divide on the server with E(W_add)^{(P+1)^-1 mod n}; exact only when
  // every encoded sum is divisible by P+1.
  bool server_side_division = false;
  std::chrono::milliseconds barrier_timeout{0};  // 0 waits forever
  std::uint64_t blind_seed = 0;
  // Pins l instead of sampling it; for tests that inject scores.
  std::optional<std::uint64_t> fixed_blinding_factor;
};

struct ScoreLogEntry {
  std::uint32_t round = 0;
  std::uint32_t participant = 0;
  double score = 0.0;
  double threshold = 0.0;
  bool included = false;
  bool dropped = false;  // no reply before the barrier deadline
};

struct ServerTiming {
  double blind_s = 0.0;
  double aggregate_s = 0.0;
};

// Everything the server holds. No private key material and no plaintext weights.
struct ServerState {
  paillier::PublicKey pk;
  std::uint32_t round = 0;
  std::size_t param_count = 0;
  kernels::CipherVector global;
  std::uint32_t included_count = 1;
  ThresholdSchedule schedule;
  std::optional<std::uint64_t> blinding_factor;  // current round's l
  std::vector<ScoreLogEntry> score_log;

  Bytes serialize() const;
};

class Server {
 public:
  Server(paillier::PublicKey pk, ServerConfig cfg);

  // Installs E(W_init) as the global parameters. Throws ProtocolOrderError if
  // called twice.
  void accept_init(const wire::RoundMessage& init);

  // Current global parameters as published to every party.
  wire::RoundMessage global_message() const;

  // One full server round; returns the new GlobalParams.
  wire::RoundMessage server_round(const wire::RoundMessage& initiator_update, ParticipantChannel& channel);

  const ServerState& state() const { return state_; }
  const ServerTiming& last_timing() const { return timing_; }

 private:
  ServerConfig cfg_;
  ServerState state_;
  Rng blind_rng_;
  bool initialized_ = false;
  bool global_is_init_ = true;
  ServerTiming timing_;
};

}  // namespace relcheck::protocol
