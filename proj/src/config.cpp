#include "relcheck/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "relcheck/errors.hpp"
#include "relcheck/fixed_point.hpp"
#include "relcheck/paillier.hpp"

namespace relcheck::config {
namespace {

using nlohmann::json;

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be reported with their full path.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* raw(const std::string& key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  Section child(const std::string& key) {
    const json* v = raw(key);
    static const json empty = json::object();
    return Section(v ? *v : empty, at(key));
  }

  void number(const std::string& key, double& out) {
    if (const json* v = raw(key)) {
      if (!v->is_number()) throw ConfigError(at(key), "expected a number");
      out = v->get<double>();
    }
  }

  template <typename U>
  void unsigned_int(const std::string& key, U& out) {
    if (const json* v = raw(key)) {
      if (!v->is_number_integer() || v->get<std::int64_t>() < 0) {
        throw ConfigError(at(key), "expected a nonnegative integer");
      }
      out = static_cast<U>(v->get<std::uint64_t>());
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = raw(key)) {
      if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = raw(key)) {
      if (!v->is_string()) throw ConfigError(at(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void path(const std::string& key, std::filesystem::path& out) {
    std::string s;
    string(key, s);
    if (!s.empty()) out = s;
  }

  // Parses a string field through `parse`, rewrapping its error with the path.
  template <typename T, typename F>
  void choice(const std::string& key, T& out, F parse) {
    std::string s;
    string(key, s);
    if (s.empty()) return;
    try {
      out = parse(s);
    } catch (const UsageError& e) {
      throw ConfigError(at(key), e.what());
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_idx(Section s, IdxFiles& out) {
  s.path("images", out.images);
  s.path("labels", out.labels);
  s.finish();
}

void read_model(Section s, ml::ModelSpec& m) {
  s.choice("kind", m.kind, ml::parse_model_kind);
  if (const json* hl = s.raw("hidden_layers")) {
    if (!hl->is_array()) throw ConfigError(s.at("hidden_layers"), "expected an array");
    m.hidden_layers.clear();
    for (std::size_t i = 0; i < hl->size(); ++i) {
      Section layer((*hl)[i], s.at("hidden_layers") + "[" + std::to_string(i) + "]");
      ml::HiddenLayer h;
      layer.unsigned_int("width", h.width);
      layer.choice("activation", h.activation, ml::parse_activation);
      layer.finish();
      m.hidden_layers.push_back(h);
    }
  }
  s.number("leaky_slope", m.leaky_slope);
  s.boolean("sigmoid_output", m.sigmoid_output);
  s.finish();
}

void read_train(Section s, ml::TrainConfig& t) {
  s.number("learning_rate", t.learning_rate);
  s.unsigned_int("batch_size", t.batch_size);
  s.unsigned_int("local_epochs", t.local_epochs);
  s.finish();
}

void read_data(Section s, DataConfig& d) {
  s.choice("source", d.source, [](const std::string& v) {
    if (v == "synthetic") return DataConfig::Source::kSynthetic;
    if (v == "idx") return DataConfig::Source::kIdx;
    throw UsageError("expected synthetic or idx");
  });
  s.unsigned_int("input_dim", d.input_dim);
  s.unsigned_int("class_count", d.class_count);
  s.number("separation", d.synth.separation);
  s.number("spread", d.synth.spread);
  s.boolean("normalize", d.normalize);
  if (s.has("idx")) read_idx(s.child("idx"), d.idx);
  s.finish();
}

void read_noise(Section s, NoiseConfig& n) {
  s.choice("source", n.source, [](const std::string& v) {
    if (v == "synthetic_disjoint") return NoiseConfig::Source::kSyntheticDisjoint;
    if (v == "supplied_file") return NoiseConfig::Source::kSuppliedFile;
    throw UsageError("expected synthetic_disjoint or supplied_file");
  });
  s.number("shift", n.synth.shift);
  s.number("separation", n.synth.separation);
  s.number("spread", n.synth.spread);
  s.choice("label_policy", n.synth.label_policy, data::parse_noise_label_policy);
  s.boolean("anchor_to_task", n.anchor_to_task);
  if (s.has("file")) read_idx(s.child("file"), n.file);
  s.finish();
}

void read_partition(Section s, data::PartitionPlan& p) {
  s.unsigned_int("initiator_size", p.initiator_size);
  s.unsigned_int("rp_count", p.rp_count);
  s.unsigned_int("rp_size", p.rp_size);
  s.unsigned_int("up_count", p.up_count);
  s.unsigned_int("up_clean_size", p.up_clean_size);
  s.unsigned_int("up_noise_size", p.up_noise_size);
  s.unsigned_int("initiator_test_size", p.initiator_test_size);
  s.unsigned_int("rp_test_size", p.rp_test_size);
  s.unsigned_int("up_test_clean_size", p.up_test_clean_size);
  s.unsigned_int("up_test_noise_size", p.up_test_noise_size);
  s.finish();
}

void read_threshold(Section s, protocol::ThresholdSchedule& t) {
  s.choice("mode", t.mode, [](const std::string& v) {
    if (v == "fixed") return protocol::ThresholdSchedule::Mode::kFixed;
    if (v == "stepped") return protocol::ThresholdSchedule::Mode::kStepped;
    throw UsageError("expected fixed or stepped");
  });
  s.number("value", t.fixed);
  s.number("start", t.start);
  s.number("end", t.end);
  s.number("step", t.step);
  s.unsigned_int("rounds_per_step", t.rounds_per_step);
  s.finish();
}

void read_crypto(Section s, CryptoConfig& c) {
  s.unsigned_int("key_bits", c.key_bits);
  s.unsigned_int("scale_bits", c.scale_bits);
  s.unsigned_int("blind_bits", c.blind_bits);
  s.boolean("server_side_division", c.server_side_division);
  std::filesystem::path stem;
  s.path("key_stem", stem);
  if (!stem.empty()) c.key_stem = stem;
  s.finish();
}

void read_adversaries(const json& arr, const std::string& path, std::vector<AdversaryConfig>& out) {
  if (!arr.is_array()) throw ConfigError(path, "expected an array");
  out.clear();
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Section s(arr[i], path + "[" + std::to_string(i) + "]");
    AdversaryConfig a;
    s.string("party", a.party);
    if (a.party.empty()) throw ConfigError(s.at("party"), "required");
    s.choice("behavior", a.behavior.kind, protocol::ParticipantBehavior::parse);
    s.number("weight_scale", a.behavior.random_weight_scale);
    std::uint64_t delay_ms = 0;
    s.unsigned_int("delay_ms", delay_ms);
    a.behavior.delay = std::chrono::milliseconds(delay_ms);
    s.finish();
    out.push_back(a);
  }
}

json idx_json(const IdxFiles& f) { return json{{"images", f.images.string()}, {"labels", f.labels.string()}}; }

}  // namespace

Mode parse_mode(const std::string& name) {
  if (name == "filtered") return Mode::kFiltered;
  if (name == "nofilter") return Mode::kNoFilter;
  if (name == "centralized") return Mode::kCentralized;
  if (name == "standalone") return Mode::kStandalone;
  throw UsageError("unknown mode '" + name + "' (filtered, nofilter, centralized, standalone)");
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::kFiltered:
      return "filtered";
    case Mode::kNoFilter:
      return "nofilter";
    case Mode::kCentralized:
      return "centralized";
    case Mode::kStandalone:
      return "standalone";
  }
  return "?";
}

TrainingRunConfig TrainingRunConfig::defaults() {
  TrainingRunConfig c;
  c.model.kind = ml::ModelKind::kLogistic;
  c.model.input_dim = c.data.input_dim;
  c.model.num_classes = c.data.class_count;
  c.partition.rp_count = 1;
  c.partition.up_count = 2;
  c.partition.initiator_test_size = 1000;
  c.partition.rp_test_size = 1000;
  c.partition.up_test_clean_size = 500;
  c.partition.up_test_noise_size = 500;
  c.threshold = protocol::ThresholdSchedule::fixed_at(0.9);
  return c;
}

void TrainingRunConfig::validate() const {
  if (model.input_dim > 0) {
    try {
      model.validate();
    } catch (const UsageError& e) {
      throw ConfigError("model", e.what());
    }
  }
  if (train.learning_rate <= 0.0) throw ConfigError("train.learning_rate", "must be positive");
  if (train.batch_size == 0) throw ConfigError("train.batch_size", "must be positive");
  if (data.source == DataConfig::Source::kSynthetic) {
    if (data.input_dim == 0) throw ConfigError("data.input_dim", "must be positive");
    if (data.class_count < 2) throw ConfigError("data.class_count", "needs at least two classes");
    if (data.synth.spread < 0.0) throw ConfigError("data.spread", "must be nonnegative");
  } else if (data.idx.images.empty() || data.idx.labels.empty()) {
    throw ConfigError("data.idx", "images and labels paths are required for source idx");
  }
  if (noise.source == NoiseConfig::Source::kSuppliedFile && (noise.file.images.empty() || noise.file.labels.empty())) {
    throw ConfigError("noise.file", "images and labels paths are required for source supplied_file");
  }
  if (noise.source == NoiseConfig::Source::kSyntheticDisjoint && partition.noise_needed() > 0 &&
      noise.synth.shift <= 0.0) {
    throw ConfigError("noise.shift", "must be positive so noise stays disjoint from the task data");
  }
  if (partition.initiator_size == 0) throw ConfigError("partition.initiator_size", "must be positive");
  if (partition.initiator_test_size + partition.rp_count * partition.rp_test_size +
          partition.up_count * partition.up_test_clean_size ==
      0) {
    throw ConfigError("partition", "no clean test rows to evaluate on");
  }
  const bool federated = mode == Mode::kFiltered || mode == Mode::kNoFilter;
  if (federated && partition.rp_count + partition.up_count == 0) {
    throw ConfigError("partition", "federated modes need at least one participant");
  }
  try {
    threshold.validate();
  } catch (const UsageError& e) {
    throw ConfigError("threshold", e.what());
  }
  if (crypto.key_bits < paillier::kMinKeyBits) {
    throw ConfigError("crypto.key_bits", "below the minimum of " + std::to_string(paillier::kMinKeyBits));
  }
  if (crypto.scale_bits == 0 || crypto.scale_bits > 60) throw ConfigError("crypto.scale_bits", "must be in [1, 60]");
  if (crypto.blind_bits < 2 || crypto.blind_bits > 62) throw ConfigError("crypto.blind_bits", "must be in [2, 62]");
  if (federated && model.input_dim > 0) {
    // The bound is on n, so check against the smallest modulus of this size.
    const mpz_class smallest_n = mpz_class(1) << (crypto.key_bits - 1);
    try {
      check_overflow_budget(smallest_n, model.param_count(), crypto.scale_bits, crypto.blind_bits);
    } catch (const RangeError& e) {
      throw ConfigError("crypto.key_bits", e.what());
    }
  }
  if (plateau.enabled && plateau.patience == 0) throw ConfigError("plateau.patience", "must be positive");
  std::set<std::string> adversary_parties;
  for (std::size_t i = 0; i < adversaries.size(); ++i) {
    const std::string& p = adversaries[i].party;
    const std::string where = "adversaries[" + std::to_string(i) + "].party";
    if (p == "initiator") throw ConfigError(where, "the initiator cannot be an adversary");
    if (!adversary_parties.insert(p).second) throw ConfigError(where, "party listed twice");
  }
}

TrainingRunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  TrainingRunConfig c = TrainingRunConfig::defaults();
  Section s(root, "");
  if (s.has("schema_version")) {
    int v = 0;
    s.unsigned_int("schema_version", v);
    if (v != kConfigSchemaVersion) throw ConfigError("schema_version", "unsupported version " + std::to_string(v));
  }
  s.choice("mode", c.mode, parse_mode);
  if (s.has("model")) read_model(s.child("model"), c.model);
  if (s.has("train")) read_train(s.child("train"), c.train);
  if (s.has("data")) read_data(s.child("data"), c.data);
  if (s.has("noise")) read_noise(s.child("noise"), c.noise);
  if (s.has("partition")) read_partition(s.child("partition"), c.partition);
  if (s.has("threshold")) read_threshold(s.child("threshold"), c.threshold);
  if (s.has("crypto")) read_crypto(s.child("crypto"), c.crypto);
  s.unsigned_int("max_rounds", c.max_rounds);
  if (s.has("plateau")) {
    Section p = s.child("plateau");
    p.boolean("enabled", c.plateau.enabled);
    p.unsigned_int("patience", c.plateau.patience);
    p.number("min_delta", c.plateau.min_delta);
    p.finish();
  }
  if (s.has("seeds")) {
    Section p = s.child("seeds");
    p.unsigned_int("data", c.seeds.data);
    p.unsigned_int("init", c.seeds.init);
    p.unsigned_int("crypto", c.seeds.crypto);
    p.finish();
  }
  if (const json* adv = s.raw("adversaries")) read_adversaries(*adv, "adversaries", c.adversaries);
  std::uint64_t timeout_ms = 0;
  s.unsigned_int("barrier_timeout_ms", timeout_ms);
  c.barrier_timeout = std::chrono::milliseconds(timeout_ms);
  s.finish();

  if (c.data.source == DataConfig::Source::kSynthetic) {
    c.model.input_dim = c.data.input_dim;
    c.model.num_classes = c.data.class_count;
  } else {
    c.model.input_dim = 0;  // known once the files are read
  }
  c.validate();
  return c;
}

TrainingRunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_json(const TrainingRunConfig& c, int indent) {
  json layers = json::array();
  for (const auto& h : c.model.hidden_layers) {
    layers.push_back({{"width", h.width}, {"activation", ml::to_string(h.activation)}});
  }
  json adversaries = json::array();
  for (const auto& a : c.adversaries) {
    std::string kind = "honest";
    if (a.behavior.kind == protocol::ParticipantBehavior::Kind::kRandomWeights) kind = "random_weights";
    if (a.behavior.kind == protocol::ParticipantBehavior::Kind::kStraggler) kind = "straggler";
    adversaries.push_back({{"party", a.party},
                           {"behavior", kind},
                           {"weight_scale", a.behavior.random_weight_scale},
                           {"delay_ms", a.behavior.delay.count()}});
  }
  const auto& t = c.threshold;
  json j = {
      {"schema_version", kConfigSchemaVersion},
      {"mode", to_string(c.mode)},
      {"model",
       {{"kind", ml::to_string(c.model.kind)},
        {"hidden_layers", layers},
        {"leaky_slope", c.model.leaky_slope},
        {"sigmoid_output", c.model.sigmoid_output}}},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"batch_size", c.train.batch_size},
        {"local_epochs", c.train.local_epochs}}},
      {"data",
       {{"source", c.data.source == DataConfig::Source::kSynthetic ? "synthetic" : "idx"},
        {"input_dim", c.data.input_dim},
        {"class_count", c.data.class_count},
        {"separation", c.data.synth.separation},
        {"spread", c.data.synth.spread},
        {"normalize", c.data.normalize},
        {"idx", idx_json(c.data.idx)}}},
      {"noise",
       {{"source",
         c.noise.source == NoiseConfig::Source::kSyntheticDisjoint ? "synthetic_disjoint" : "supplied_file"},
        {"shift", c.noise.synth.shift},
        {"separation", c.noise.synth.separation},
        {"spread", c.noise.synth.spread},
        {"label_policy", data::to_string(c.noise.synth.label_policy)},
        {"anchor_to_task", c.noise.anchor_to_task},
        {"file", idx_json(c.noise.file)}}},
      {"partition",
       {{"initiator_size", c.partition.initiator_size},
        {"rp_count", c.partition.rp_count},
        {"rp_size", c.partition.rp_size},
        {"up_count", c.partition.up_count},
        {"up_clean_size", c.partition.up_clean_size},
        {"up_noise_size", c.partition.up_noise_size},
        {"initiator_test_size", c.partition.initiator_test_size},
        {"rp_test_size", c.partition.rp_test_size},
        {"up_test_clean_size", c.partition.up_test_clean_size},
        {"up_test_noise_size", c.partition.up_test_noise_size}}},
      {"threshold",
       {{"mode", t.mode == protocol::ThresholdSchedule::Mode::kFixed ? "fixed" : "stepped"},
        {"value", t.fixed},
        {"start", t.start},
        {"end", t.end},
        {"step", t.step},
        {"rounds_per_step", t.rounds_per_step}}},
      {"crypto",
       {{"key_bits", c.crypto.key_bits},
        {"scale_bits", c.crypto.scale_bits},
        {"blind_bits", c.crypto.blind_bits},
        {"server_side_division", c.crypto.server_side_division},
        {"key_stem", c.crypto.key_stem ? c.crypto.key_stem->string() : std::string()}}},
      {"max_rounds", c.max_rounds},
      {"plateau",
       {{"enabled", c.plateau.enabled}, {"patience", c.plateau.patience}, {"min_delta", c.plateau.min_delta}}},
      {"seeds", {{"data", c.seeds.data}, {"init", c.seeds.init}, {"crypto", c.seeds.crypto}}},
      {"adversaries", adversaries},
      {"barrier_timeout_ms", c.barrier_timeout.count()},
  };
  return j.dump(indent);
}

void override_seeds(TrainingRunConfig& cfg, std::uint64_t seed) {
  Rng rng = derive_rng(seed, Stream::kData, 99);
  cfg.seeds.data = rng();
  cfg.seeds.init = rng();
  cfg.seeds.crypto = rng();
}

}  // namespace relcheck::config
