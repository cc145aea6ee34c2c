#include "relcheck/run.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "relcheck/errors.hpp"
#include "relcheck/fixed_point.hpp"
#include "relcheck/random.hpp"
#include "relcheck/similarity.hpp"
#include "relcheck/stopwatch.hpp"
#include "relcheck/wire.hpp"

namespace relcheck::run {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::vector<double>> empirical_class_means(const Dataset& ds) {
  std::vector<std::vector<double>> means(ds.class_count, std::vector<double>(ds.dim(), 0.0));
  std::vector<std::size_t> counts(ds.class_count, 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto c = static_cast<std::size_t>(ds.labels[i]);
    ++counts[c];
    for (std::size_t d = 0; d < ds.dim(); ++d) means[c][d] += ds.X(i, d);
  }
  for (std::size_t c = 0; c < means.size(); ++c) {
    if (counts[c] == 0) continue;
    for (double& v : means[c]) v /= static_cast<double>(counts[c]);
  }
  return means;
}

RunReport run_baseline(config::TrainingRunConfig cfg) {
  PreparedData data = prepare_data(cfg);
  const Dataset train = cfg.mode == config::Mode::kCentralized ? data.shards.pooled_clean_train()
                                                                : data.shards.initiator().train;
  Rng init_rng = derive_rng(cfg.seeds.init, Stream::kInit, 0);
  ml::ModelParams params = ml::init_params(cfg.model, init_rng);
  Rng train_rng = derive_rng(cfg.seeds.init, Stream::kTrain, 0);
  const auto eval_batch = ml::make_batch(data.eval);

  RunReport report;
  report.mode = cfg.mode;
  report.initial = ml::evaluate(cfg.model, params, data.eval);
  report.initial_validation_loss = ml::cost(cfg.model, params, eval_batch);
  PlateauTracker plateau(cfg.plateau, report.initial_validation_loss);
  report.stop_reason = "max_rounds";
  for (std::uint32_t r = 1; r <= cfg.max_rounds; ++r) {
    params = ml::train_local(cfg.model, params, train, cfg.train, train_rng);
    RoundRecord rec;
    rec.round = r;
    rec.threshold = kNaN;
    const auto ev = ml::evaluate(cfg.model, params, data.eval);
    rec.accuracy = ev.accuracy;
    rec.test_error = ev.test_error;
    rec.validation_loss = ml::cost(cfg.model, params, eval_batch);
    report.rounds.push_back(rec);
    if (plateau.observe(rec.validation_loss)) {
      report.stop_reason = "plateau";
      break;
    }
  }
  return report;
}

}  // namespace

PreparedData prepare_data(config::TrainingRunConfig& cfg) {
  const auto& plan = cfg.partition;
  Dataset clean;
  if (cfg.data.source == config::DataConfig::Source::kSynthetic) {
    clean = data::synth_classification(plan.clean_needed(), cfg.data.input_dim, cfg.data.class_count,
                                       cfg.seeds.data, cfg.data.synth);
  } else {
    clean = data::load_idx(cfg.data.idx.images, cfg.data.idx.labels);
    cfg.model.input_dim = clean.dim();
    cfg.model.num_classes = clean.class_count;
    cfg.validate();
  }

  Dataset noise;
  if (plan.noise_needed() == 0) {
    noise.X = Matrix(0, clean.dim());
    noise.class_count = clean.class_count;
  } else if (cfg.noise.source == config::NoiseConfig::Source::kSyntheticDisjoint) {
    data::NoiseOptions opts = cfg.noise.synth;
    if (cfg.noise.anchor_to_task) {
      opts.anchors = cfg.data.source == config::DataConfig::Source::kSynthetic
                         ? data::class_means(clean.dim(), clean.class_count, cfg.seeds.data, cfg.data.synth)
                         : empirical_class_means(clean);
    }
    noise = data::synth_noise(plan.noise_needed(), clean.dim(), clean.class_count, cfg.seeds.data, opts);
  } else {
    noise = data::load_idx(cfg.noise.file.images, cfg.noise.file.labels);
    if (noise.dim() < clean.dim()) noise = data::pad_dimension(noise, clean.dim());
    // Labels of supplied noise carry no task meaning; fold them into range.
    for (int& l : noise.labels) l %= static_cast<int>(clean.class_count);
    noise.class_count = clean.class_count;
  }

  if (cfg.data.normalize) {
    const auto norm = data::fit_normalizer(clean);
    clean = data::apply_normalizer(norm, clean);
    if (noise.size() > 0) noise = data::apply_normalizer(norm, noise);
  }

  PreparedData out;
  out.shards = data::partition(clean, noise, plan, cfg.seeds.data);
  out.eval = out.shards.pooled_clean_test();
  return out;
}

paillier::KeyPair make_keys(const config::TrainingRunConfig& cfg) {
  if (cfg.crypto.key_stem) {
    paillier::KeyPair keys;
    keys.pub = paillier::read_public_key(cfg.crypto.key_stem->string() + ".pub");
    keys.priv = paillier::read_private_key(cfg.crypto.key_stem->string() + ".key");
    if (keys.pub.key_id != keys.priv.key_id) throw KeyError("key files do not belong together");
    return keys;
  }
  Rng rng = derive_rng(cfg.seeds.crypto, Stream::kKeygen, 0);
  return paillier::generate_keypair(cfg.crypto.key_bits, rng);
}

Session::Session(config::TrainingRunConfig cfg) : cfg_(std::move(cfg)) {
  data_ = prepare_data(cfg_);
  keys_ = make_keys(cfg_);
  build();
}

Session::Session(config::TrainingRunConfig cfg, PreparedData data, paillier::KeyPair keys)
    : cfg_(std::move(cfg)), data_(std::move(data)), keys_(std::move(keys)) {
  build();
}

Session::~Session() {
  if (channel_) channel_->finish_round();
}

void Session::build() {
  if (cfg_.mode != config::Mode::kFiltered && cfg_.mode != config::Mode::kNoFilter) {
    throw UsageError("a session runs federated modes only");
  }
  check_overflow_budget(keys_.pub.n, cfg_.model.param_count(), cfg_.crypto.scale_bits, cfg_.crypto.blind_bits);

  protocol::PartyConfig base;
  base.spec = cfg_.model;
  base.train = cfg_.train;
  base.pk = keys_.pub;
  base.sk = keys_.priv;
  base.scale_bits = cfg_.crypto.scale_bits;
  base.blind_bits = cfg_.crypto.blind_bits;
  base.train_seed = cfg_.seeds.init;
  base.crypto_seed = cfg_.seeds.crypto;
  base.init_seed = cfg_.seeds.init;

  std::map<std::string, protocol::ParticipantBehavior> behaviors;
  for (std::size_t i = 0; i < cfg_.adversaries.size(); ++i) {
    const auto& a = cfg_.adversaries[i];
    bool known = false;
    for (std::size_t p = 1; p < data_.shards.parties.size(); ++p) known |= data_.shards.parties[p].party_id == a.party;
    if (!known) throw ConfigError("adversaries[" + std::to_string(i) + "].party", "no participant named " + a.party);
    behaviors[a.party] = a.behavior;
  }

  const auto& parties = data_.shards.parties;
  protocol::PartyConfig ic = base;
  ic.id = wire::kInitiatorId;
  ic.name = parties[0].party_id;
  ic.data = parties[0].train;
  initiator_ = std::make_unique<protocol::ModelInitiator>(std::move(ic));

  std::vector<protocol::Participant*> raw;
  for (std::size_t p = 1; p < parties.size(); ++p) {
    protocol::PartyConfig pc = base;
    pc.id = static_cast<std::uint32_t>(p);
    pc.name = parties[p].party_id;
    pc.data = parties[p].train;
    const auto it = behaviors.find(pc.name);
    participants_.push_back(std::make_unique<protocol::Participant>(
        std::move(pc), it == behaviors.end() ? protocol::ParticipantBehavior{} : it->second));
    raw.push_back(participants_.back().get());
  }

  protocol::ServerConfig sc;
  sc.schedule = cfg_.mode == config::Mode::kNoFilter ? protocol::ThresholdSchedule::fixed_at(-1.0) : cfg_.threshold;
  sc.blind_bits = cfg_.crypto.blind_bits;
  sc.server_side_division = cfg_.crypto.server_side_division;
  sc.barrier_timeout = cfg_.barrier_timeout;
  sc.blind_seed = cfg_.seeds.crypto;
  server_ = std::make_unique<protocol::Server>(keys_.pub, sc);
  channel_ = std::make_unique<protocol::LocalChannel>(std::move(raw));
}

void Session::initialize() {
  if (initialized_) throw ProtocolOrderError("session already initialized");
  const auto init = wire::encode(initiator_->initiator_init());
  server_->accept_init(wire::decode(init));
  initialized_ = true;
}

RoundRecord Session::step() {
  if (!initialized_) throw ProtocolOrderError("step before initialize");
  const auto global = wire::encode(server_->global_message());
  channel_->begin_round(global);
  const auto update = wire::encode(initiator_->initiator_round(wire::decode(global)));
  server_->server_round(wire::decode(update), *channel_);
  channel_->finish_round();

  const auto& state = server_->state();
  RoundRecord rec;
  rec.round = state.round;
  rec.threshold = state.schedule.at(state.round);
  const auto ids = participant_ids();
  for (const auto& e : state.score_log) {
    if (e.round != state.round) continue;
    PartyRecord pr;
    pr.party_id = ids.at(e.participant - 1);
    pr.similarity = e.score;
    pr.included = e.included;
    pr.dropped = e.dropped;
    rec.threshold = e.threshold;
    rec.parties.push_back(pr);
  }
  const auto ev = evaluate_global();
  rec.accuracy = ev.accuracy;
  rec.test_error = ev.test_error;
  rec.validation_loss = validation_loss();
  rec.timings.initiator = initiator_->last_timing();
  for (const auto& p : participants_) rec.timings.participants.push_back(p->last_timing());
  rec.timings.server = server_->last_timing();
  return rec;
}

ml::ModelParams Session::global_params() const {
  const FixedPointCodec codec(keys_.pub.n, cfg_.crypto.scale_bits);
  ml::ModelParams p;
  p.flat = protocol::decode_global(server_->global_message(), keys_.priv, codec);
  return p;
}

ml::Evaluation Session::evaluate_global() const { return ml::evaluate(cfg_.model, global_params(), data_.eval); }

double Session::validation_loss() const {
  return ml::cost(cfg_.model, global_params(), ml::make_batch(data_.eval));
}

std::vector<std::string> Session::participant_ids() const {
  std::vector<std::string> ids;
  for (const auto& p : participants_) ids.push_back(p->config().name);
  return ids;
}

PlateauTracker::PlateauTracker(config::PlateauRule rule, double initial_loss) : rule_(rule), best_(initial_loss) {}

bool PlateauTracker::observe(double loss) {
  if (!rule_.enabled) return false;
  if (loss < best_ - rule_.min_delta) {
    best_ = loss;
    stale_ = 0;
    return false;
  }
  best_ = std::min(best_, loss);
  return ++stale_ >= rule_.patience;
}

RunReport run_training(config::TrainingRunConfig cfg) {
  cfg.validate();
  if (cfg.mode == config::Mode::kCentralized || cfg.mode == config::Mode::kStandalone) return run_baseline(cfg);

  Session session(std::move(cfg));
  const auto& c = session.config();
  session.initialize();
  RunReport report;
  report.mode = c.mode;
  report.participant_ids = session.participant_ids();
  report.initial = session.evaluate_global();
  report.initial_validation_loss = session.validation_loss();
  report.stop_reason = "max_rounds";
  PlateauTracker plateau(c.plateau, report.initial_validation_loss);
  for (std::uint32_t r = 1; r <= c.max_rounds; ++r) {
    report.rounds.push_back(session.step());
    if (plateau.observe(report.rounds.back().validation_loss)) {
      report.stop_reason = "plateau";
      break;
    }
  }
  return report;
}

std::vector<TimingRow> measure_similarity_timing(config::TrainingRunConfig cfg, std::size_t repetitions) {
  if (repetitions == 0) throw UsageError("repetitions must be positive");
  cfg.mode = config::Mode::kFiltered;
  Session session(std::move(cfg));
  session.initialize();
  const auto& c = session.config();
  const auto& pk = session.keys().pub;
  const FixedPointCodec codec(pk.n, c.crypto.scale_bits);
  Rng crypto_rng = derive_rng(c.seeds.crypto, Stream::kCrypto, 0xC0FFEE);
  Rng blind_rng = derive_rng(c.seeds.crypto, Stream::kBlind, 0xC0FFEE);

  // Each phase runs alone so concurrent parties do not inflate its wall clock.
  double initiator = 0.0;
  double participant = 0.0;
  double server = 0.0;
  for (std::size_t i = 0; i < repetitions; ++i) {
    session.step();
    const auto w_so = similarity::normalize_weights(session.initiator().local_params().flat);
    const auto w_sp = similarity::normalize_weights(session.participant(0).local_params().flat);

    Stopwatch t0;
    const auto e_so = similarity::encrypt_component(pk, w_so, codec, crypto_rng);
    initiator += t0.seconds();

    const auto l = similarity::sample_blinding_factor(blind_rng, c.crypto.blind_bits);
    Stopwatch t1;
    const auto blinded = similarity::blind_component(pk, e_so, l);
    server += t1.seconds();

    Stopwatch t2;
    const auto score = similarity::compute_blinded_score(pk, blinded, w_sp, codec, c.crypto.blind_bits);
    similarity::open_blinded_score(session.keys().priv, score, codec);
    participant += t2.seconds();
  }
  const double n = static_cast<double>(repetitions);
  return {{"Model Initiator", initiator / n}, {"Participant", participant / n}, {"Server", server / n}};
}

}  // namespace relcheck::run
