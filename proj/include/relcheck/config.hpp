#pragma once
// Run configuration, read from a JSON file. See README for the full schema.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "relcheck/data.hpp"
#include "relcheck/ml.hpp"
#include "relcheck/protocol.hpp"

namespace relcheck::config {

inline constexpr int kConfigSchemaVersion = 1;

enum class Mode { kFiltered, kNoFilter, kCentralized, kStandalone };
Mode parse_mode(const std::string& name);
std::string to_string(Mode m);

struct IdxFiles {
  std::filesystem::path images;
  std::filesystem::path labels;
};

struct DataConfig {
  enum class Source { kSynthetic, kIdx };
  Source source = Source::kSynthetic;
  std::size_t input_dim = 20;
  std::size_t class_count = 4;
  data::SynthOptions synth{3.0, 1.25};
  // Min-max scaling plus centering fitted on the task data; noise goes
  // through the same transform. Synthetic features are already centered.
  bool normalize = false;
  IdxFiles idx;
};

struct NoiseConfig {
  enum class Source { kSyntheticDisjoint, kSuppliedFile };
  Source source = Source::kSyntheticDisjoint;
  data::NoiseOptions synth{3.0, 3.0, 1.25, data::NoiseLabelPolicy::kMismatched, {}};
  // Noise clusters copy the task's class centers before the shift.
  bool anchor_to_task = true;
  IdxFiles file;
};

struct CryptoConfig {
  unsigned key_bits = 256;
  unsigned scale_bits = 32;
  unsigned blind_bits = 20;
  bool server_side_division = false;
  std::optional<std::filesystem::path> key_stem;  // stem.pub / stem.key from keygen
};

struct PlateauRule {
  bool enabled = false;
  std::uint32_t patience = 10;
  double min_delta = 1e-4;
};

struct Seeds {
  std::uint64_t data = 1;
  std::uint64_t init = 2;
  std::uint64_t crypto = 3;
};

struct AdversaryConfig {
  std::string party;  // e.g. "up1"
  protocol::ParticipantBehavior behavior;
};

struct TrainingRunConfig {
  Mode mode = Mode::kFiltered;
  ml::ModelSpec model;
  ml::TrainConfig train;
  DataConfig data;
  NoiseConfig noise;
  data::PartitionPlan partition;
  protocol::ThresholdSchedule threshold;
  CryptoConfig crypto;
  std::uint32_t max_rounds = 150;
  PlateauRule plateau;
  Seeds seeds;
  std::vector<AdversaryConfig> adversaries;
  std::chrono::milliseconds barrier_timeout{0};

  // Shipped defaults: 4-class synthetic task, one reliable and two
  // unreliable participants, fixed threshold 0.9.
  static TrainingRunConfig defaults();

  // Cross-field checks, including the fixed-point overflow budget. Throws
  // ConfigError naming the offending field.
  void validate() const;
};

// Missing keys keep their defaults; unknown keys are rejected.
TrainingRunConfig parse_config(const std::string& json_text);
TrainingRunConfig load_config(const std::filesystem::path& path);
std::string to_json(const TrainingRunConfig& cfg, int indent = 2);

// Replaces the data/init/crypto seeds with three values derived from one.
void override_seeds(TrainingRunConfig& cfg, std::uint64_t seed);

}  // namespace relcheck::config
