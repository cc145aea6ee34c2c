#include "relcheck/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <numeric>
#include <random>

#include "relcheck/errors.hpp"
#include "relcheck/random.hpp"

namespace relcheck::data {
namespace {

std::vector<double> random_direction(std::size_t dim, double norm, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(dim);
  double len = 0.0;
  do {
    len = 0.0;
    for (double& x : v) {
      x = gauss(rng);
      len += x * x;
    }
  } while (len == 0.0);
  len = std::sqrt(len);
  for (double& x : v) x *= norm / len;
  return v;
}

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(idx[i - 1], idx[pick(rng)]);
  }
}

// Rows around `means`, cluster i % k for row i, then shuffled.
Dataset sample_clusters(std::size_t n, std::size_t dim, const std::vector<std::vector<double>>& means,
                        const std::vector<std::vector<double>>& offsets, double spread, Rng& rng,
                        std::vector<std::size_t>& cluster_of_row) {
  const std::size_t k = means.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle_indices(order, rng);
  std::normal_distribution<double> gauss(0.0, spread);
  Dataset ds;
  ds.X = Matrix(n, dim);
  ds.labels.assign(n, 0);
  cluster_of_row.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t row = order[i];
    const std::size_t c = i % k;
    cluster_of_row[row] = c;
    for (std::size_t d = 0; d < dim; ++d) {
      ds.X(row, d) = means[c][d] + (offsets.empty() ? 0.0 : offsets[c][d]) + gauss(rng);
    }
  }
  return ds;
}

void require_positive(std::size_t n, std::size_t dim, std::size_t k) {
  if (n == 0 || dim == 0 || k == 0) throw UsageError("synthetic data sizes must be positive");
}

std::uint32_t read_be32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("truncated IDX header in " + what);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

std::vector<std::size_t> take(const std::vector<std::size_t>& pool, std::size_t& cursor, std::size_t count) {
  std::vector<std::size_t> out(pool.begin() + static_cast<std::ptrdiff_t>(cursor),
                               pool.begin() + static_cast<std::ptrdiff_t>(cursor + count));
  cursor += count;
  return out;
}

std::size_t scale(std::size_t v, std::size_t divisor) {
  if (v == 0) return 0;
  return std::max<std::size_t>(1, v / divisor);
}

}  // namespace

std::vector<std::vector<double>> class_means(std::size_t input_dim, std::size_t class_count, std::uint64_t seed,
                                             const SynthOptions& opts) {
  Rng rng = derive_rng(seed, Stream::kData, 0);
  std::vector<std::vector<double>> means;
  for (std::size_t c = 0; c < class_count; ++c) means.push_back(random_direction(input_dim, opts.separation, rng));
  return means;
}

Dataset synth_classification(std::size_t n_samples, std::size_t input_dim, std::size_t class_count,
                             std::uint64_t seed, const SynthOptions& opts) {
  require_positive(n_samples, input_dim, class_count);
  Rng rng = derive_rng(seed, Stream::kData, 0);
  std::vector<std::vector<double>> means;
  for (std::size_t c = 0; c < class_count; ++c) means.push_back(random_direction(input_dim, opts.separation, rng));
  std::vector<std::size_t> cluster;
  Dataset ds = sample_clusters(n_samples, input_dim, means, {}, opts.spread, rng, cluster);
  ds.class_count = class_count;
  for (std::size_t i = 0; i < n_samples; ++i) ds.labels[i] = static_cast<int>(cluster[i]);
  return ds;
}

NoiseLabelPolicy parse_noise_label_policy(const std::string& name) {
  if (name == "per_sample") return NoiseLabelPolicy::kPerSample;
  if (name == "per_cluster") return NoiseLabelPolicy::kPerCluster;
  if (name == "mismatched") return NoiseLabelPolicy::kMismatched;
  throw UsageError("unknown noise label policy '" + name + "'");
}

std::string to_string(NoiseLabelPolicy p) {
  switch (p) {
    case NoiseLabelPolicy::kPerSample:
      return "per_sample";
    case NoiseLabelPolicy::kPerCluster:
      return "per_cluster";
    case NoiseLabelPolicy::kMismatched:
      return "mismatched";
  }
  return "?";
}

Dataset synth_noise(std::size_t n_samples, std::size_t input_dim, std::size_t class_count,
                    std::uint64_t seed, const NoiseOptions& opts) {
  require_positive(n_samples, input_dim, class_count);
  Rng rng = derive_rng(seed, Stream::kData, 1);
  const std::vector<double> shift = random_direction(input_dim, opts.shift, rng);
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> offsets;
  if (!opts.anchors.empty()) {
    if (opts.anchors.size() != class_count) throw DimensionError("noise anchors must match class_count");
    for (const auto& a : opts.anchors) {
      if (a.size() != input_dim) throw DimensionError("noise anchor width differs from input_dim");
    }
    means = opts.anchors;
    offsets.assign(class_count, shift);
  } else {
    for (std::size_t c = 0; c < class_count; ++c) {
      means.push_back(random_direction(input_dim, opts.separation, rng));
      offsets.push_back(shift);
    }
  }
  std::vector<int> cluster_label(class_count);
  std::uniform_int_distribution<int> any_label(0, static_cast<int>(class_count) - 1);
  for (std::size_t c = 0; c < class_count; ++c) {
    if (opts.label_policy == NoiseLabelPolicy::kMismatched && class_count > 1) {
      std::uniform_int_distribution<int> other(0, static_cast<int>(class_count) - 2);
      const int l = other(rng);
      cluster_label[c] = l >= static_cast<int>(c) ? l + 1 : l;
    } else {
      cluster_label[c] = any_label(rng);
    }
  }

  std::vector<std::size_t> cluster;
  Dataset ds = sample_clusters(n_samples, input_dim, means, offsets, opts.spread, rng, cluster);
  ds.class_count = class_count;
  for (std::size_t i = 0; i < n_samples; ++i) {
    ds.labels[i] = opts.label_policy != NoiseLabelPolicy::kPerSample ? cluster_label[cluster[i]]
                                                                      : any_label(rng);
  }
  return ds;
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::size_t min_class_count) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw FormatError("cannot open IDX images: " + images_path.string());
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw FormatError("cannot open IDX labels: " + labels_path.string());

  if (read_be32(images, images_path.string()) != kIdxImageMagic) {
    throw FormatError("bad IDX image magic in " + images_path.string());
  }
  const std::uint32_t count = read_be32(images, images_path.string());
  const std::uint32_t rows = read_be32(images, images_path.string());
  const std::uint32_t cols = read_be32(images, images_path.string());

  if (read_be32(labels, labels_path.string()) != kIdxLabelMagic) {
    throw FormatError("bad IDX label magic in " + labels_path.string());
  }
  const std::uint32_t label_count = read_be32(labels, labels_path.string());
  if (label_count != count) {
    throw FormatError("IDX count mismatch: " + std::to_string(count) + " images vs " +
                      std::to_string(label_count) + " labels");
  }

  const std::size_t dim = std::size_t{rows} * cols;
  if (dim == 0) throw FormatError("IDX images have zero size");
  std::vector<unsigned char> pixels(std::size_t{count} * dim);
  if (!images.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()))) {
    throw FormatError("truncated IDX image payload");
  }
  std::vector<unsigned char> raw_labels(count);
  if (!labels.read(reinterpret_cast<char*>(raw_labels.data()), static_cast<std::streamsize>(raw_labels.size()))) {
    throw FormatError("truncated IDX label payload");
  }

  Dataset ds;
  ds.X = Matrix(count, dim);
  for (std::size_t i = 0; i < pixels.size(); ++i) ds.X.data[i] = pixels[i] / 255.0;
  ds.labels.assign(raw_labels.begin(), raw_labels.end());
  int max_label = -1;
  for (int y : ds.labels) max_label = std::max(max_label, y);
  ds.class_count = std::max<std::size_t>(min_class_count, static_cast<std::size_t>(max_label + 1));
  return ds;
}

Normalizer fit_normalizer(const Dataset& ds) {
  if (ds.empty()) throw UsageError("normalize: empty dataset");
  const std::size_t dim = ds.dim();
  Normalizer n;
  n.min.assign(dim, 0.0);
  n.range.assign(dim, 0.0);
  n.mean.assign(dim, 0.0);
  for (std::size_t d = 0; d < dim; ++d) {
    double lo = ds.X(0, d);
    double hi = lo;
    for (std::size_t r = 1; r < ds.size(); ++r) {
      lo = std::min(lo, ds.X(r, d));
      hi = std::max(hi, ds.X(r, d));
    }
    n.min[d] = lo;
    n.range[d] = hi - lo;
    if (n.range[d] > 0.0) {
      double total = 0.0;
      for (std::size_t r = 0; r < ds.size(); ++r) total += (ds.X(r, d) - lo) / n.range[d];
      n.mean[d] = total / static_cast<double>(ds.size());
    }
  }
  return n;
}

Dataset apply_normalizer(const Normalizer& norm, const Dataset& ds) {
  if (norm.min.size() != ds.dim()) throw DimensionError("normalizer width does not match dataset");
  Dataset out = ds;
  for (std::size_t r = 0; r < out.size(); ++r) {
    for (std::size_t d = 0; d < out.dim(); ++d) {
      double& v = out.X(r, d);
      v = norm.range[d] > 0.0 ? (v - norm.min[d]) / norm.range[d] - norm.mean[d] : 0.0;
    }
  }
  return out;
}

Dataset normalize_center(const Dataset& ds) { return apply_normalizer(fit_normalizer(ds), ds); }

Dataset pad_dimension(const Dataset& ds, std::size_t new_dim) {
  if (new_dim < ds.dim()) throw DimensionError("cannot pad to a narrower dimension");
  Dataset out;
  out.class_count = ds.class_count;
  out.labels = ds.labels;
  out.X = Matrix(ds.size(), new_dim);
  for (std::size_t r = 0; r < ds.size(); ++r) std::copy_n(ds.X.row(r).begin(), ds.dim(), out.X.row(r).begin());
  return out;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "label";
  for (std::size_t d = 0; d < ds.dim(); ++d) out << ",x" << d;
  out << '\n' << std::setprecision(17);
  for (std::size_t r = 0; r < ds.size(); ++r) {
    out << ds.labels[r];
    for (double v : ds.X.row(r)) out << ',' << v;
    out << '\n';
  }
}

std::string to_string(PartyRole r) {
  switch (r) {
    case PartyRole::kInitiator: return "initiator";
    case PartyRole::kReliable: return "reliable";
    case PartyRole::kUnreliable: return "unreliable";
  }
  return "?";
}

std::size_t PartitionPlan::clean_needed() const {
  return initiator_size + rp_count * rp_size + up_count * up_clean_size + initiator_test_size +
         rp_count * rp_test_size + up_count * up_test_clean_size;
}

std::size_t PartitionPlan::noise_needed() const { return up_count * (up_noise_size + up_test_noise_size); }

PartitionPlan PartitionPlan::scaled_down(std::size_t divisor) const {
  if (divisor == 0) throw UsageError("scale divisor must be positive");
  PartitionPlan p = *this;
  p.initiator_size = scale(initiator_size, divisor);
  p.rp_size = scale(rp_size, divisor);
  p.up_clean_size = scale(up_clean_size, divisor);
  p.up_noise_size = scale(up_noise_size, divisor);
  p.initiator_test_size = scale(initiator_test_size, divisor);
  p.rp_test_size = scale(rp_test_size, divisor);
  p.up_test_clean_size = scale(up_test_clean_size, divisor);
  p.up_test_noise_size = scale(up_test_noise_size, divisor);
  return p;
}

Dataset ShardMap::pooled_clean_test() const {
  Dataset out;
  for (const auto& s : parties) out = concat(out, s.clean_test);
  return out;
}

Dataset ShardMap::pooled_clean_train() const {
  Dataset out;
  for (const auto& s : parties) {
    // Clean rows come first in every training shard.
    std::vector<std::size_t> rows(s.clean_train_indices.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    out = concat(out, s.train.subset(rows));
  }
  return out;
}

ShardMap partition(const Dataset& clean, const Dataset& noise, const PartitionPlan& plan, std::uint64_t seed) {
  clean.validate();
  if (plan.initiator_size == 0) throw UsageError("partition: initiator needs training rows");
  if (plan.clean_needed() > clean.size()) {
    throw UsageError("partition plan needs " + std::to_string(plan.clean_needed()) + " clean rows, source has " +
                     std::to_string(clean.size()));
  }
  if (plan.noise_needed() > noise.size()) {
    throw UsageError("partition plan needs " + std::to_string(plan.noise_needed()) + " noise rows, source has " +
                     std::to_string(noise.size()));
  }
  if (plan.noise_needed() > 0) {
    noise.validate();
    if (noise.dim() != clean.dim()) throw DimensionError("noise width differs from task data; pad it first");
    if (noise.class_count > clean.class_count) throw DimensionError("noise has more classes than task data");
  }

  Rng rng = derive_rng(seed, Stream::kData, 2);
  std::vector<std::size_t> clean_pool(clean.size());
  std::iota(clean_pool.begin(), clean_pool.end(), std::size_t{0});
  shuffle_indices(clean_pool, rng);
  std::vector<std::size_t> noise_pool(noise.size());
  std::iota(noise_pool.begin(), noise_pool.end(), std::size_t{0});
  shuffle_indices(noise_pool, rng);

  Dataset relabeled_noise = noise;
  relabeled_noise.class_count = clean.class_count;

  std::size_t clean_cursor = 0;
  std::size_t noise_cursor = 0;
  ShardMap map;
  auto add_party = [&](std::string id, PartyRole role, std::size_t train_clean, std::size_t train_noise) {
    Shard s;
    s.party_id = std::move(id);
    s.role = role;
    s.clean_train_indices = take(clean_pool, clean_cursor, train_clean);
    s.noise_train_indices = take(noise_pool, noise_cursor, train_noise);
    s.train = clean.subset(s.clean_train_indices);
    if (train_noise > 0) s.train = concat(s.train, relabeled_noise.subset(s.noise_train_indices));
    map.parties.push_back(std::move(s));
  };
  add_party("initiator", PartyRole::kInitiator, plan.initiator_size, 0);
  for (std::size_t i = 0; i < plan.rp_count; ++i) {
    add_party("rp" + std::to_string(i + 1), PartyRole::kReliable, plan.rp_size, 0);
  }
  for (std::size_t i = 0; i < plan.up_count; ++i) {
    add_party("up" + std::to_string(i + 1), PartyRole::kUnreliable, plan.up_clean_size, plan.up_noise_size);
  }

  for (auto& s : map.parties) {
    const std::size_t clean_test = s.role == PartyRole::kInitiator ? plan.initiator_test_size
                                   : s.role == PartyRole::kReliable ? plan.rp_test_size
                                                                    : plan.up_test_clean_size;
    const std::size_t noise_test = s.role == PartyRole::kUnreliable ? plan.up_test_noise_size : 0;
    s.clean_test_indices = take(clean_pool, clean_cursor, clean_test);
    s.noise_test_indices = take(noise_pool, noise_cursor, noise_test);
    s.clean_test = clean.subset(s.clean_test_indices);
    s.test = s.clean_test;
    if (noise_test > 0) s.test = concat(s.test, relabeled_noise.subset(s.noise_test_indices));
  }
  return map;
}

}  // namespace relcheck::data
