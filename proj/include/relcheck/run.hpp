#pragma once
// Orchestration: builds parties from a config, drives rounds, and runs the
// plaintext baselines.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "relcheck/config.hpp"
#include "relcheck/data.hpp"
#include "relcheck/ml.hpp"
#include "relcheck/paillier.hpp"
#include "relcheck/protocol.hpp"

namespace relcheck::run {

struct PreparedData {
  data::ShardMap shards;
  Dataset eval;  // pooled clean test rows
};

// Generates or loads task and noise data, normalizes, and partitions. Fills
// cfg.model.input_dim / num_classes for IDX sources.
PreparedData prepare_data(config::TrainingRunConfig& cfg);

// Loads cfg.crypto.key_stem if set, otherwise generates from the crypto seed.
paillier::KeyPair make_keys(const config::TrainingRunConfig& cfg);

struct PartyRecord {
  std::string party_id;
  double similarity = 0.0;  // NaN when the party dropped out of the round
  bool included = false;
  bool dropped = false;
};

struct PhaseTimings {
  protocol::InitiatorTiming initiator;
  std::vector<protocol::ParticipantTiming> participants;
  protocol::ServerTiming server;
};

struct RoundRecord {
  std::uint32_t round = 0;
  double threshold = 0.0;  // NaN for baselines
  std::vector<PartyRecord> parties;
  double test_error = 0.0;
  double accuracy = 0.0;
  double validation_loss = 0.0;
  PhaseTimings timings;
};

struct RunReport {
  config::Mode mode = config::Mode::kFiltered;
  std::vector<std::string> participant_ids;
  ml::Evaluation initial;  // global parameters before round 1
  double initial_validation_loss = 0.0;
  std::vector<RoundRecord> rounds;
  std::string stop_reason;  // "max_rounds" or "plateau"
};

// One encrypted federation: initiator, participants, server, and an
// in-process channel. The session also holds the shared key to evaluate the
// global model, playing the role of any key-holding party.
class Session {
 public:
  explicit Session(config::TrainingRunConfig cfg);
  Session(config::TrainingRunConfig cfg, PreparedData data, paillier::KeyPair keys);
  ~Session();

  void initialize();
  RoundRecord step();

  // Decoded global parameters as every party would see them.
  ml::ModelParams global_params() const;
  ml::Evaluation evaluate_global() const;
  double validation_loss() const;

  const config::TrainingRunConfig& config() const { return cfg_; }
  const PreparedData& data() const { return data_; }
  const paillier::KeyPair& keys() const { return keys_; }
  const protocol::ModelInitiator& initiator() const { return *initiator_; }
  const protocol::Participant& participant(std::size_t i) const { return *participants_.at(i); }
  std::size_t participant_count() const { return participants_.size(); }
  const protocol::Server& server() const { return *server_; }
  std::vector<std::string> participant_ids() const;

 private:
  void build();

  config::TrainingRunConfig cfg_;
  PreparedData data_;
  paillier::KeyPair keys_;
  std::unique_ptr<protocol::ModelInitiator> initiator_;
  std::vector<std::unique_ptr<protocol::Participant>> participants_;
  std::unique_ptr<protocol::Server> server_;
  std::unique_ptr<protocol::LocalChannel> channel_;
  bool initialized_ = false;
};

// Plateau rule on the validation loss: stop after `patience` rounds without
// an improvement larger than min_delta.
class PlateauTracker {
 public:
  explicit PlateauTracker(config::PlateauRule rule, double initial_loss);
  // Returns true when training should stop.
  bool observe(double loss);

 private:
  config::PlateauRule rule_;
  double best_;
  std::uint32_t stale_ = 0;
};

// Runs cfg.mode to completion. nofilter is filtered with the threshold fixed
// at -1.
RunReport run_training(config::TrainingRunConfig cfg);

struct TimingRow {
  std::string entity;
  double seconds = 0.0;
};

// Mean per-phase seconds of the similarity computation over `repetitions`
// rounds: initiator component encryption, participant score computation and
// decryption, server blinding.
std::vector<TimingRow> measure_similarity_timing(config::TrainingRunConfig cfg, std::size_t repetitions = 3);

}  // namespace relcheck::run
