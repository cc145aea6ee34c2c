#pragma once

// Dataset synthesis, IDX loading, normalization and party partitioning.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "relcheck/dataset.hpp"

namespace relcheck::data {

struct SynthOptions {
  double separation = 3.0;  // L2 norm of each class mean
  double spread = 1.0;      // per-feature standard deviation around a mean
};

// Gaussian class clusters. Labels are balanced (counts differ by at most one)
// and the row order is shuffled. Deterministic under seed.
Dataset synth_classification(std::size_t n_samples, std::size_t input_dim, std::size_t class_count,
                             std::uint64_t seed, const SynthOptions& opts = {});

// The class centers synth_classification draws for this seed.
std::vector<std::vector<double>> class_means(std::size_t input_dim, std::size_t class_count, std::uint64_t seed,
                                             const SynthOptions& opts = {});

enum class NoiseLabelPolicy {
  kPerSample,   // each noise sample gets an independent uniform label
  kPerCluster,  // each noise cluster carries one uniformly drawn label
  kMismatched,  // cluster c carries a uniform label other than c
};

NoiseLabelPolicy parse_noise_label_policy(const std::string& name);
std::string to_string(NoiseLabelPolicy p);

struct NoiseOptions {
  double shift = 4.0;       // norm of the common offset separating noise from task data
  double separation = 3.0;  // norm of each noise cluster mean before the shift
  double spread = 1.0;
  NoiseLabelPolicy label_policy = NoiseLabelPolicy::kPerCluster;
  // Cluster centers to imitate before the shift, one per class (e.g. the
  // task's class_means). Empty draws independent random centers.
  std::vector<std::vector<double>> anchors;
};

// Samples from clusters unrelated to the task distribution, moved away from
// the origin by a common shift. Labels carry no information about the task.
Dataset synth_noise(std::size_t n_samples, std::size_t input_dim, std::size_t class_count,
                    std::uint64_t seed, const NoiseOptions& opts = {});

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// Big-endian IDX image/label pair. Pixels are scaled to [0, 1]. class_count
// is max label + 1. Throws FormatError on bad magic, truncation, or a count
// mismatch between the two files.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::size_t min_class_count = 0);

// Per-feature min-max scaling to unit range, then mean removal. Constant
// features map to zero.
struct Normalizer {
  std::vector<double> min;
  std::vector<double> range;
  std::vector<double> mean;  // mean after scaling
};

Normalizer fit_normalizer(const Dataset& ds);
Dataset apply_normalizer(const Normalizer& norm, const Dataset& ds);
Dataset normalize_center(const Dataset& ds);

// Appends zero features so a supplied dataset matches a wider input space.
Dataset pad_dimension(const Dataset& ds, std::size_t new_dim);

void write_csv(const Dataset& ds, const std::filesystem::path& path);

enum class PartyRole { kInitiator, kReliable, kUnreliable };
std::string to_string(PartyRole r);

struct PartitionPlan {
  std::size_t initiator_size = 400;
  std::size_t rp_count = 2;
  std::size_t rp_size = 400;
  std::size_t up_count = 1;
  std::size_t up_clean_size = 200;
  std::size_t up_noise_size = 200;
  std::size_t initiator_test_size = 200;
  std::size_t rp_test_size = 200;
  std::size_t up_test_clean_size = 100;
  std::size_t up_test_noise_size = 100;

  std::size_t clean_needed() const;
  std::size_t noise_needed() const;
  std::size_t party_count() const { return 1 + rp_count + up_count; }

  // Scales every size by 1/divisor (rounding down, floor of 1 for nonzero sizes).
  PartitionPlan scaled_down(std::size_t divisor) const;
};

struct Shard {
  std::string party_id;  // "initiator", "rp1".., "up1"..
  PartyRole role = PartyRole::kInitiator;
  Dataset train;
  Dataset test;        // clean plus noise rows for unreliable parties
  Dataset clean_test;  // clean rows only
  std::vector<std::size_t> clean_train_indices;
  std::vector<std::size_t> clean_test_indices;
  std::vector<std::size_t> noise_train_indices;
  std::vector<std::size_t> noise_test_indices;
};

// Index 0 is the initiator, then reliable parties, then unreliable ones.
struct ShardMap {
  std::vector<Shard> parties;

  const Shard& initiator() const { return parties.front(); }
  // Union of every party's clean test rows.
  Dataset pooled_clean_test() const;
  // Union of every party's clean training rows.
  Dataset pooled_clean_train() const;
};

// Clean shards are pairwise disjoint. Throws UsageError when the plan needs
// more rows than the sources hold.
ShardMap partition(const Dataset& clean, const Dataset& noise, const PartitionPlan& plan,
                   std::uint64_t seed);

}  // namespace relcheck::data
