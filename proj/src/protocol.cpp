#include "relcheck/protocol.hpp"

#include <cmath>
#include <limits>
#include <thread>

#include "relcheck/byte_io.hpp"
#include "relcheck/errors.hpp"
#include "relcheck/stopwatch.hpp"

namespace relcheck::protocol {
namespace {

void check_message_key(const wire::RoundMessage& msg, std::uint64_t key_id) {
  if (msg.key_id != key_id) throw KeyError("message bound to a different key");
}

void check_length(const kernels::CipherVector& v, std::size_t expected, const char* what) {
  if (v.size() != expected) {
    throw DimensionError(std::string(what) + " has " + std::to_string(v.size()) + " elements, expected " +
                         std::to_string(expected));
  }
}

void check_party_keys(const PartyConfig& cfg) {
  if (cfg.pk.key_id != cfg.sk.key_id) throw KeyError("party public and private keys do not match");
}

}  // namespace

ThresholdSchedule ThresholdSchedule::fixed_at(double t) {
  ThresholdSchedule s;
  s.mode = Mode::kFixed;
  s.fixed = t;
  return s;
}

ThresholdSchedule ThresholdSchedule::stepped(double start, double end, double step, std::uint32_t rounds_per_step) {
  ThresholdSchedule s;
  s.mode = Mode::kStepped;
  s.start = start;
  s.end = end;
  s.step = step;
  s.rounds_per_step = rounds_per_step;
  return s;
}

double ThresholdSchedule::at(std::uint32_t round) const {
  if (mode == Mode::kFixed) return fixed;
  const std::uint32_t stage = round == 0 ? 0 : (round - 1) / rounds_per_step;
  // Rounded to the step grid so 0.1 + 3 * 0.1 reads back as 0.4.
  const double raw = start + step * static_cast<double>(stage);
  const double snapped = std::round(raw * 1e12) / 1e12;
  return std::min(end, snapped);
}

void ThresholdSchedule::validate() const {
  auto in_range = [](double t) { return t >= -1.0 && t < 1.0; };
  if (mode == Mode::kFixed) {
    if (!in_range(fixed)) throw UsageError("threshold must lie in [-1, 1)");
    return;
  }
  if (!in_range(start) || !in_range(end)) throw UsageError("stepped thresholds must lie in [-1, 1)");
  if (step < 0.0) throw UsageError("stepped threshold step must be nonnegative");
  if (end < start) throw UsageError("stepped threshold end must not be below start");
  if (rounds_per_step == 0) throw UsageError("rounds_per_step must be positive");
}

bool passes_threshold(double score, double threshold) {
  return threshold < score && score <= 1.0 + kScoreUpperSlack;
}

std::vector<double> decode_global(const wire::RoundMessage& msg, const paillier::PrivateKey& sk,
                                  const FixedPointCodec& codec) {
  check_message_key(msg, sk.key_id);
  const kernels::CipherVector* weights = nullptr;
  std::uint32_t divisor = 1;
  if (msg.tag() == wire::MessageTag::kInitParams) {
    weights = &msg.as<wire::InitParams>().weights;
  } else {
    const auto& g = msg.as<wire::GlobalParams>();
    weights = &g.weights;
    divisor = g.included_count;
  }
  if (divisor == 0) throw FormatError("included_count of zero");
  const auto plain = kernels::parallel::decrypt(sk, *weights);
  std::vector<double> out = kernels::decode_all(codec, plain, 1);
  for (double& v : out) v /= static_cast<double>(divisor);
  return out;
}

ModelInitiator::ModelInitiator(PartyConfig cfg)
    : cfg_(std::move(cfg)),
      codec_(cfg_.pk.n, cfg_.scale_bits),
      train_rng_(derive_rng(cfg_.train_seed, Stream::kTrain, cfg_.id)),
      crypto_rng_(derive_rng(cfg_.crypto_seed, Stream::kCrypto, cfg_.id)) {
  check_party_keys(cfg_);
  cfg_.spec.validate();
  if (cfg_.data.empty()) throw UsageError("initiator has no training data");
}

wire::RoundMessage ModelInitiator::initiator_init() {
  if (initialized_) throw ProtocolOrderError("initialization phase already executed");
  Rng init_rng = derive_rng(cfg_.init_seed, Stream::kInit, 0);
  initial_ = ml::init_params(cfg_.spec, init_rng);
  params_ = initial_;
  const auto encoded = kernels::encode_all(codec_, initial_.flat);
  wire::RoundMessage msg;
  msg.round = 0;
  msg.sender = cfg_.id;
  msg.key_id = cfg_.pk.key_id;
  msg.payload = wire::InitParams{kernels::parallel::encrypt(cfg_.pk, encoded, crypto_rng_())};
  initialized_ = true;
  return msg;
}

wire::RoundMessage ModelInitiator::initiator_round(const wire::RoundMessage& global) {
  if (!initialized_) throw ProtocolOrderError("initiator_round before initiator_init");
  if (global.round != round_) {
    throw ProtocolOrderError("initiator expected global parameters of round " + std::to_string(round_) + ", got " +
                             std::to_string(global.round));
  }
  ml::ModelParams start;
  if (global.tag() == wire::MessageTag::kInitParams) {
    check_message_key(global, cfg_.pk.key_id);
    start = initial_;
  } else {
    start.flat = decode_global(global, cfg_.sk, codec_);
  }

  Stopwatch train_clock;
  params_ = ml::train_local(cfg_.spec, start, cfg_.data, cfg_.train, train_rng_);
  timing_.train_s = train_clock.seconds();

  const auto component = similarity::normalize_weights(params_.flat);

  Stopwatch weights_clock;
  const auto encoded = kernels::encode_all(codec_, params_.flat);
  wire::InitiatorUpdate update;
  update.weights = kernels::parallel::encrypt(cfg_.pk, encoded, crypto_rng_());
  timing_.encrypt_weights_s = weights_clock.seconds();

  Stopwatch component_clock;
  update.component = similarity::encrypt_component(cfg_.pk, component, codec_, crypto_rng_);
  timing_.encrypt_component_s = component_clock.seconds();

  ++round_;
  wire::RoundMessage msg;
  msg.round = round_;
  msg.sender = cfg_.id;
  msg.key_id = cfg_.pk.key_id;
  msg.payload = std::move(update);
  return msg;
}

ParticipantBehavior::Kind ParticipantBehavior::parse(const std::string& name) {
  if (name == "honest") return Kind::kHonest;
  if (name == "random_weights") return Kind::kRandomWeights;
  if (name == "straggler") return Kind::kStraggler;
  throw UsageError("unknown participant behavior '" + name + "'");
}

Participant::Participant(PartyConfig cfg, ParticipantBehavior behavior)
    : cfg_(std::move(cfg)),
      behavior_(behavior),
      codec_(cfg_.pk.n, cfg_.scale_bits),
      train_rng_(derive_rng(cfg_.train_seed, Stream::kTrain, cfg_.id)),
      crypto_rng_(derive_rng(cfg_.crypto_seed, Stream::kCrypto, cfg_.id)),
      adversary_rng_(derive_rng(cfg_.train_seed, Stream::kInit, 1000 + cfg_.id)) {
  check_party_keys(cfg_);
  cfg_.spec.validate();
  if (cfg_.data.empty() && behavior_.kind != ParticipantBehavior::Kind::kRandomWeights) {
    throw UsageError("participant " + cfg_.name + " has no training data");
  }
}

void Participant::receive_global(const wire::RoundMessage& global) {
  received_.push_back(global.tag());
  if (global.tag() != wire::MessageTag::kInitParams && global.tag() != wire::MessageTag::kGlobalParams) {
    throw ProtocolOrderError("participant expected global parameters, got " + wire::to_string(global.tag()));
  }
  if (global.round < round_) throw ProtocolOrderError("stale global parameters");
  trained_ = false;
  round_ = global.round;
  ml::ModelParams start;
  start.flat = decode_global(global, cfg_.sk, codec_);

  Stopwatch train_clock;
  if (behavior_.kind == ParticipantBehavior::Kind::kRandomWeights) {
    std::normal_distribution<double> gauss(0.0, behavior_.random_weight_scale);
    params_.flat.assign(start.flat.size(), 0.0);
    for (double& w : params_.flat) w = gauss(adversary_rng_);
  } else {
    params_ = ml::train_local(cfg_.spec, start, cfg_.data, cfg_.train, train_rng_);
  }
  timing_.train_s = train_clock.seconds();
  trained_ = true;
}

wire::RoundMessage Participant::respond(const wire::RoundMessage& challenge) {
  received_.push_back(challenge.tag());
  const auto& blind = challenge.as<wire::BlindChallenge>();
  if (!trained_) throw ProtocolOrderError("challenge received before local training finished");
  if (challenge.round != round_ + 1) {
    throw ProtocolOrderError("challenge for round " + std::to_string(challenge.round) + ", participant is at " +
                             std::to_string(round_ + 1));
  }
  check_message_key(challenge, cfg_.pk.key_id);

  Stopwatch score_clock;
  const auto w_sp = similarity::normalize_weights(params_.flat);
  const auto blinded_cipher =
      similarity::compute_blinded_score(cfg_.pk, {blind.blinded}, w_sp, codec_, cfg_.blind_bits);
  const double blinded_score = similarity::open_blinded_score(cfg_.sk, blinded_cipher, codec_);
  timing_.score_s = score_clock.seconds();

  Stopwatch weights_clock;
  const auto encoded = kernels::encode_all(codec_, params_.flat);
  wire::ParticipantUpdate update;
  update.weights = kernels::parallel::encrypt(cfg_.pk, encoded, crypto_rng_());
  update.blinded_score = blinded_score;
  timing_.encrypt_weights_s = weights_clock.seconds();

  if (behavior_.kind == ParticipantBehavior::Kind::kStraggler && behavior_.delay.count() > 0) {
    std::this_thread::sleep_for(behavior_.delay);
  }

  trained_ = false;
  round_ = challenge.round;
  wire::RoundMessage msg;
  msg.round = challenge.round;
  msg.sender = cfg_.id;
  msg.key_id = cfg_.pk.key_id;
  msg.payload = std::move(update);
  return msg;
}

wire::RoundMessage Participant::participant_round(const wire::RoundMessage& global,
                                                  const wire::RoundMessage& challenge) {
  receive_global(global);
  return respond(challenge);
}

LocalChannel::LocalChannel(std::vector<Participant*> parties) : parties_(std::move(parties)) {}

LocalChannel::~LocalChannel() {
  try {
    finish_round();
  } catch (...) {
  }
}

void LocalChannel::begin_round(const Bytes& global) {
  finish_round();
  training_.clear();
  for (Participant* p : parties_) {
    training_.push_back(std::async(std::launch::async, [p, global] { p->receive_global(wire::decode(global)); }).share());
  }
}

void LocalChannel::finish_round() {
  for (auto& f : replies_) {
    if (f.valid()) f.wait();
  }
  replies_.clear();
  for (auto& f : training_) {
    if (f.valid()) f.wait();
  }
}

std::vector<std::uint32_t> LocalChannel::participants() const {
  std::vector<std::uint32_t> ids;
  for (const Participant* p : parties_) ids.push_back(p->config().id);
  return ids;
}

std::vector<std::optional<Bytes>> LocalChannel::exchange(const Bytes& challenge, std::chrono::milliseconds timeout) {
  if (training_.size() != parties_.size()) throw ProtocolOrderError("exchange before begin_round");
  replies_.clear();
  for (std::size_t i = 0; i < parties_.size(); ++i) {
    Participant* p = parties_[i];
    auto trained = training_[i];
    replies_.push_back(std::async(std::launch::async, [p, trained, challenge] {
      trained.get();
      return wire::encode(p->respond(wire::decode(challenge)));
    }));
  }
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::vector<std::optional<Bytes>> out(parties_.size());
  for (std::size_t i = 0; i < replies_.size(); ++i) {
    auto& f = replies_[i];
    if (timeout.count() > 0 && f.wait_until(deadline) != std::future_status::ready) continue;
    try {
      out[i] = f.get();
    } catch (const Error&) {
      // A party that fails its round (e.g. degenerate weights) is absent for it.
    }
  }
  return out;
}

Bytes ServerState::serialize() const {
  ByteWriter out;
  out.raw(paillier::serialize(pk));
  out.u32(round);
  out.u64(param_count);
  out.u32(static_cast<std::uint32_t>(global.size()));
  for (const auto& c : global) out.integer(c.value);
  out.u32(included_count);
  out.u8(schedule.mode == ThresholdSchedule::Mode::kFixed ? 0 : 1);
  out.f64(schedule.fixed);
  out.f64(schedule.start);
  out.f64(schedule.end);
  out.f64(schedule.step);
  out.u32(schedule.rounds_per_step);
  out.u8(blinding_factor.has_value() ? 1 : 0);
  out.u64(blinding_factor.value_or(0));
  out.u32(static_cast<std::uint32_t>(score_log.size()));
  for (const auto& e : score_log) {
    out.u32(e.round);
    out.u32(e.participant);
    out.f64(e.score);
    out.f64(e.threshold);
    out.u8(e.included ? 1 : 0);
    out.u8(e.dropped ? 1 : 0);
  }
  return std::move(out).take();
}

Server::Server(paillier::PublicKey pk, ServerConfig cfg)
    : cfg_(std::move(cfg)), blind_rng_(derive_rng(cfg_.blind_seed, Stream::kBlind, 0)) {
  cfg_.schedule.validate();
  if (cfg_.fixed_blinding_factor) similarity::BlindingFactor check(*cfg_.fixed_blinding_factor, cfg_.blind_bits);
  state_.pk = std::move(pk);
  state_.schedule = cfg_.schedule;
}

void Server::accept_init(const wire::RoundMessage& init) {
  if (initialized_) throw ProtocolOrderError("server already initialized");
  check_message_key(init, state_.pk.key_id);
  const auto& p = init.as<wire::InitParams>();
  if (init.round != 0) throw ProtocolOrderError("initial parameters must carry round 0");
  if (p.weights.empty()) throw DimensionError("empty initial parameter vector");
  state_.global = p.weights;
  state_.param_count = p.weights.size();
  state_.included_count = 1;
  state_.round = 0;
  initialized_ = true;
  global_is_init_ = true;
}

wire::RoundMessage Server::global_message() const {
  if (!initialized_) throw ProtocolOrderError("server has no global parameters yet");
  wire::RoundMessage msg;
  msg.round = state_.round;
  msg.sender = wire::kServerId;
  msg.key_id = state_.pk.key_id;
  if (global_is_init_) {
    msg.payload = wire::InitParams{state_.global};
  } else {
    msg.payload = wire::GlobalParams{state_.global, state_.included_count};
  }
  return msg;
}

wire::RoundMessage Server::server_round(const wire::RoundMessage& initiator_update, ParticipantChannel& channel) {
  if (!initialized_) throw ProtocolOrderError("server_round before initialization");
  const std::uint32_t round = state_.round + 1;
  if (initiator_update.round != round) {
    throw ProtocolOrderError("initiator update for round " + std::to_string(initiator_update.round) +
                             ", server expects " + std::to_string(round));
  }
  if (initiator_update.sender != wire::kInitiatorId) throw ProtocolOrderError("update not sent by the initiator");
  check_message_key(initiator_update, state_.pk.key_id);
  const auto& update = initiator_update.as<wire::InitiatorUpdate>();
  check_length(update.weights, state_.param_count, "E(W_o)");
  check_length(update.component, state_.param_count, "E(W_so)");

  const double threshold = cfg_.schedule.at(round);
  const similarity::BlindingFactor l =
      cfg_.fixed_blinding_factor ? similarity::BlindingFactor(*cfg_.fixed_blinding_factor, cfg_.blind_bits)
                                 : similarity::sample_blinding_factor(blind_rng_, cfg_.blind_bits);
  state_.blinding_factor = l.value();

  Stopwatch blind_clock;
  wire::RoundMessage challenge;
  challenge.round = round;
  challenge.sender = wire::kServerId;
  challenge.key_id = state_.pk.key_id;
  challenge.payload = wire::BlindChallenge{similarity::blind_component(state_.pk, update.component, l).ciphers};
  timing_.blind_s = blind_clock.seconds();

  const auto ids = channel.participants();
  const auto replies = channel.exchange(wire::encode(challenge), cfg_.barrier_timeout);
  if (replies.size() != ids.size()) throw ProtocolOrderError("channel returned a reply count that does not match");

  Stopwatch aggregate_clock;
  kernels::CipherVector sum = update.weights;
  std::uint32_t included = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ScoreLogEntry entry;
    entry.round = round;
    entry.participant = ids[i];
    entry.threshold = threshold;
    entry.score = std::numeric_limits<double>::quiet_NaN();
    std::optional<wire::RoundMessage> reply;
    if (replies[i]) {
      try {
        reply = wire::decode(*replies[i]);
        if (reply->round != round || reply->sender != ids[i]) throw ProtocolOrderError("misrouted reply");
        check_message_key(*reply, state_.pk.key_id);
        check_length(reply->as<wire::ParticipantUpdate>().weights, state_.param_count, "E(W_p)");
      } catch (const Error&) {
        reply.reset();
      }
    }
    if (!reply) {
      entry.dropped = true;
      state_.score_log.push_back(entry);
      continue;
    }
    const auto& pu = reply->as<wire::ParticipantUpdate>();
    entry.score = similarity::unblind(pu.blinded_score, l).value;
    entry.included = passes_threshold(entry.score, threshold);
    if (entry.included) {
      sum = kernels::parallel::add(state_.pk, sum, pu.weights);
      ++included;
    }
    state_.score_log.push_back(entry);
  }

  const std::uint32_t divisor = included + 1;
  if (cfg_.server_side_division && divisor > 1) {
    mpz_class inv;
    const mpz_class d = divisor;
    if (mpz_invert(inv.get_mpz_t(), d.get_mpz_t(), state_.pk.n.get_mpz_t()) == 0) {
      throw DomainError("P+1 not invertible mod n");
    }
    sum = kernels::parallel::scale(state_.pk, sum, inv);
    state_.included_count = 1;
  } else {
    state_.included_count = cfg_.server_side_division ? 1 : divisor;
  }
  state_.global = std::move(sum);
  state_.round = round;
  global_is_init_ = false;
  timing_.aggregate_s = aggregate_clock.seconds();
  return global_message();
}

}  // namespace relcheck::protocol
