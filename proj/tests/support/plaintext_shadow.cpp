#include "plaintext_shadow.hpp"

#include <cmath>

#include "relcheck/random.hpp"

namespace relcheck::testing {

double plain_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  long double dot = 0;
  long double na = 0;
  long double nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<long double>(a[i]) * b[i];
    na += static_cast<long double>(a[i]) * a[i];
    nb += static_cast<long double>(b[i]) * b[i];
  }
  return static_cast<double>(dot / std::sqrt(na * nb));
}

PlaintextShadow::PlaintextShadow(const config::TrainingRunConfig& cfg, const run::PreparedData& data) : cfg_(cfg) {
  for (std::size_t p = 0; p < data.shards.parties.size(); ++p) {
    train_.push_back(data.shards.parties[p].train);
    rngs_.push_back(derive_rng(cfg.seeds.init, Stream::kTrain, p));
  }
  Rng init_rng = derive_rng(cfg.seeds.init, Stream::kInit, 0);
  initial_ = ml::init_params(cfg.model, init_rng).flat;
  global_.resize(initial_.size());
  for (std::size_t i = 0; i < initial_.size(); ++i) global_[i] = quantize(initial_[i]);
}

double PlaintextShadow::quantize(double x) const {
  const int s = static_cast<int>(cfg_.crypto.scale_bits);
  return std::ldexp(std::round(std::ldexp(x, s)), -s);
}

ShadowRound PlaintextShadow::step() {
  ++round_;
  const double threshold =
      cfg_.mode == config::Mode::kNoFilter ? -1.0 : cfg_.threshold.at(round_);

  std::vector<std::vector<double>> local;
  for (std::size_t p = 0; p < train_.size(); ++p) {
    ml::ModelParams start;
    // The initiator keeps its unrounded initial weights in round 1.
    start.flat = (p == 0 && round_ == 1) ? initial_ : global_;
    local.push_back(ml::train_local(cfg_.model, start, train_[p], cfg_.train, rngs_[p]).flat);
  }

  ShadowRound out;
  std::vector<double> sum(local[0].size());
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = quantize(local[0][i]);
  std::size_t count = 1;
  for (std::size_t p = 1; p < local.size(); ++p) {
    const double s = plain_cosine(local[0], local[p]);
    const bool keep = threshold < s && s <= 1.0 + 1e-6;
    out.scores.push_back(s);
    out.included.push_back(keep);
    if (!keep) continue;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += quantize(local[p][i]);
    ++count;
  }
  for (std::size_t i = 0; i < sum.size(); ++i) global_[i] = sum[i] / static_cast<double>(count);
  out.global = global_;
  return out;
}

}  // namespace relcheck::testing
