// Acceptance checks 1-9. One PASS/FAIL line each; nonzero exit on any failure.

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "relcheck/bigint.hpp"
#include "relcheck/config.hpp"
#include "relcheck/errors.hpp"
#include "relcheck/ml.hpp"
#include "relcheck/paillier.hpp"
#include "relcheck/protocol.hpp"
#include "relcheck/run.hpp"
#include "relcheck/similarity.hpp"
#include "relcheck/stopwatch.hpp"
#include "plaintext_shadow.hpp"

using namespace relcheck;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, double limit_s, const std::function<Outcome()>& check) {
  Stopwatch clock;
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = clock.seconds();
  if (limit_s > 0 && s >= limit_s) {
    o.pass = false;
    o.detail += " (over the " + std::to_string(static_cast<int>(limit_s)) + " s budget)";
  }
  if (!o.pass) ++failures;
  std::printf("%s %d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), s);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Outcome paillier_laws() {
  int bad = 0;
  for (unsigned bits : {128u, 256u}) {
    Rng rng = derive_rng(bits, Stream::kCrypto);
    const auto k = paillier::generate_keypair(bits, rng);
    for (int i = 0; i < 1000; ++i) {
      const mpz_class m1 = bigint::random_below(rng, k.pub.n);
      const mpz_class m2 = bigint::random_below(rng, k.pub.n);
      const mpz_class s = bigint::random_below(rng, k.pub.n);
      const auto c1 = paillier::encrypt(k.pub, m1, rng);
      const auto c2 = paillier::encrypt(k.pub, m2, rng);
      if (paillier::decrypt(k.priv, c1) != m1) ++bad;
      const mpz_class sum = (m1 + m2) % k.pub.n;
      if (paillier::decrypt(k.priv, paillier::add_cipher(k.pub, c1, c2)) != sum) ++bad;
      const mpz_class prod = (m1 * s) % k.pub.n;
      if (paillier::decrypt(k.priv, paillier::scalar_mul(k.pub, c1, s)) != prod) ++bad;
    }
  }
  return {bad == 0, std::to_string(bad) + " failures in 6000 checks"};
}

Outcome similarity_oracle() {
  Rng rng = derive_rng(2, Stream::kCrypto);
  const auto k = paillier::generate_keypair(256, rng);
  const FixedPointCodec codec(k.pub.n, 32);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t sizes[] = {5, 50, 200};
  double worst = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t f = sizes[i % 3];
    std::vector<double> u(f);
    std::vector<double> v(f);
    for (auto& x : u) x = gauss(rng);
    // Mix of related and unrelated pairs so scores span [-1, 1].
    const double mix = (i % 7) / 6.0;
    for (std::size_t j = 0; j < f; ++j) v[j] = mix * u[j] * (i % 2 ? 1 : -1) + (1 - mix) * gauss(rng);
    const auto l = similarity::sample_blinding_factor(rng);
    const auto e = similarity::encrypt_component(k.pub, similarity::normalize_weights(u), codec, rng);
    const auto blinded = similarity::blind_component(k.pub, e, l);
    const auto c = similarity::compute_blinded_score(k.pub, blinded, similarity::normalize_weights(v), codec);
    const double got = similarity::unblind(similarity::open_blinded_score(k.priv, c, codec), l).value;
    worst = std::max(worst, std::abs(got - similarity::plaintext_cosine(u, v).value));
  }
  return {worst <= 1e-6, fmt("max |encrypted - plaintext| = %.3g over 200 pairs", worst)};
}

double gradient_error(const ml::ModelSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  auto p = ml::init_params(spec, rng);
  std::normal_distribution<double> jitter(0.0, 0.3);
  for (auto& w : p.flat) w += jitter(rng);
  const auto batch = ml::make_batch(data::synth_classification(32, spec.input_dim, spec.num_classes, seed));
  const auto g = ml::gradients(spec, p, batch);
  double worst = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto plus = p;
    auto minus = p;
    plus.flat[i] += 1e-6;
    minus.flat[i] -= 1e-6;
    const double fd = (ml::cost(spec, plus, batch) - ml::cost(spec, minus, batch)) / 2e-6;
    worst = std::max(worst, std::abs(fd - g[i]) / std::max({std::abs(fd), std::abs(g[i]), 1e-8}));
  }
  return worst;
}

Outcome gradient_checks() {
  const ml::ModelSpec logistic{ml::ModelKind::kLogistic, 20, {}, 4};
  const ml::ModelSpec mlp{ml::ModelKind::kMlp,
                          10,
                          {{16, ml::Activation::kTanh}, {12, ml::Activation::kSigmoid}},
                          4};
  const double a = gradient_error(logistic, 1);
  const double b = gradient_error(mlp, 2);
  return {a < 1e-4 && b < 1e-4 && mlp.param_count() <= 500,
          fmt("logistic %.3g, mlp (%.0f params) %.3g", a, static_cast<double>(mlp.param_count()), b)};
}

Outcome shadow_equivalence() {
  auto cfg = config::TrainingRunConfig::defaults();
  cfg.crypto.key_bits = 256;
  cfg.partition.rp_count = 2;
  cfg.partition.up_count = 1;
  run::Session session(cfg);
  relcheck::testing::PlaintextShadow shadow(session.config(), session.data());
  session.initialize();
  const double tol = static_cast<double>(cfg.model.param_count()) * std::ldexp(1.0, -30);
  double worst = 0;
  bool decisions_agree = true;
  for (int r = 0; r < 10; ++r) {
    const auto rec = session.step();
    const auto want = shadow.step();
    for (std::size_t p = 0; p < rec.parties.size(); ++p) decisions_agree &= rec.parties[p].included == want.included[p];
    const auto got = session.global_params().flat;
    for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - want.global[i]));
  }
  return {worst <= tol && decisions_agree,
          fmt("max element deviation %.3g (tolerance %.3g) over 10 rounds", worst, tol) +
              (decisions_agree ? "" : ", inclusion decisions differ")};
}

struct FederatedRun {
  run::RunReport report;
  Outcome filtering;
  Outcome hygiene;
};

// Drives the default filtered config for its full length, checking filtering
// and scanning the server state as it goes.
FederatedRun filtered_run(const config::TrainingRunConfig& cfg) {
  FederatedRun out;
  run::Session session(cfg);
  session.initialize();
  const auto ids = session.participant_ids();
  const FixedPointCodec codec(session.keys().pub.n, cfg.crypto.scale_bits);

  std::vector<std::string> secrets;
  auto add_int = [&](const mpz_class& v) {
    const auto b = bigint::to_bytes(v);
    if (b.size() >= 4) secrets.emplace_back(b.begin(), b.end());
  };
  add_int(session.keys().priv.lambda);
  add_int(session.keys().priv.mu);

  std::size_t rounds_after_5 = 0;
  std::size_t good_rounds = 0;
  std::size_t leaks = 0;
  while (out.report.rounds.size() < cfg.max_rounds) {
    auto rec = session.step();
    if (rec.round > 5) {
      ++rounds_after_5;
      double min_rp = 2.0;
      for (const auto& p : rec.parties) {
        if (p.party_id.rfind("rp", 0) == 0) min_rp = std::min(min_rp, p.similarity);
      }
      bool ok = true;
      for (const auto& p : rec.parties) {
        if (p.party_id.rfind("up", 0) == 0) ok &= p.similarity < min_rp && !p.included;
      }
      good_rounds += ok ? 1 : 0;
    }

    // Plaintext weights this round: IEEE bytes, and encoded residues framed
    // the way the state writes integers (u32 length, magnitude). A bare 4-byte
    // residue would collide with random ciphertext bytes by chance.
    std::vector<std::string> needles = secrets;
    auto add_weights = [&](const std::vector<double>& w) {
      for (double x : w) {
        if (x == 0.0) continue;
        needles.emplace_back(reinterpret_cast<const char*>(&x), sizeof x);
        const auto b = bigint::to_bytes(codec.encode(x));
        std::string framed(4, '\0');
        for (int i = 0; i < 4; ++i) framed[i] = static_cast<char>(b.size() >> (24 - 8 * i));
        framed.append(b.begin(), b.end());
        needles.push_back(std::move(framed));
      }
    };
    add_weights(session.initiator().local_params().flat);
    for (std::size_t i = 0; i < session.participant_count(); ++i) add_weights(session.participant(i).local_params().flat);
    add_weights(session.global_params().flat);
    const auto state = session.server().state().serialize();
    const std::string hay(state.begin(), state.end());
    for (const auto& n : needles) {
      if (hay.find(n) == std::string::npos) continue;
      ++leaks;
      std::string hex;
      for (unsigned char ch : n) {
        char b[3];
        std::snprintf(b, sizeof b, "%02x", ch);
        hex += b;
      }
      std::fprintf(stderr, "round %u: server state contains %s\n", session.server().state().round, hex.c_str());
    }

    out.report.rounds.push_back(std::move(rec));
  }
  // Negative control: a state carrying one plaintext residue must be caught.
  auto planted = session.server().state();
  const double w0 = session.initiator().local_params().flat.front();
  planted.global.front().value = codec.encode(w0);
  const auto pb = planted.serialize();
  const auto rb = bigint::to_bytes(codec.encode(w0));
  std::string framed(4, '\0');
  for (int i = 0; i < 4; ++i) framed[i] = static_cast<char>(rb.size() >> (24 - 8 * i));
  framed.append(rb.begin(), rb.end());
  const bool control_caught = std::string(pb.begin(), pb.end()).find(framed) != std::string::npos;

  const double frac = rounds_after_5 ? static_cast<double>(good_rounds) / rounds_after_5 : 0.0;
  out.filtering = {frac >= 0.9, fmt("UPs below every RP and excluded in %.1f%% of %.0f rounds after round 5",
                                    100 * frac, static_cast<double>(rounds_after_5))};
  out.hygiene = {leaks == 0 && control_caught,
                 std::to_string(leaks) + " private-key or plaintext-weight matches in " +
                     std::to_string(cfg.max_rounds) + " serialized server states" +
                     (control_caught ? ", planted residue detected" : ", planted residue MISSED")};
  return out;
}

Outcome ordering(double filtered) {
  auto accuracy = [](config::Mode m) {
    auto cfg = config::TrainingRunConfig::defaults();
    cfg.mode = m;
    return run::run_training(cfg).rounds.back().accuracy;
  };
  const double nofilter = accuracy(config::Mode::kNoFilter);
  const double centralized = accuracy(config::Mode::kCentralized);
  const double standalone = accuracy(config::Mode::kStandalone);
  const bool ok = centralized >= filtered && filtered - nofilter >= 0.02 && standalone < filtered;
  return {ok, fmt("centralized %.4f, filtered %.4f, nofilter %.4f, standalone %.4f", centralized, filtered, nofilter,
                  standalone)};
}

class BoundaryChannel : public protocol::ParticipantChannel {
 public:
  BoundaryChannel(const paillier::PublicKey& pk, std::vector<double> scores, std::uint64_t l)
      : pk_(pk), scores_(std::move(scores)), l_(l) {}

  std::vector<std::uint32_t> participants() const override {
    std::vector<std::uint32_t> ids;
    for (std::size_t i = 0; i < scores_.size(); ++i) ids.push_back(static_cast<std::uint32_t>(i + 1));
    return ids;
  }

  std::vector<std::optional<protocol::Bytes>> exchange(const protocol::Bytes& challenge,
                                                       std::chrono::milliseconds) override {
    const auto c = wire::decode(challenge);
    const auto& blinded = c.as<wire::BlindChallenge>().blinded;
    std::vector<std::optional<protocol::Bytes>> out;
    for (std::size_t i = 0; i < scores_.size(); ++i) {
      wire::ParticipantUpdate u;
      u.weights = blinded;  // any correctly sized, correctly keyed vector
      u.blinded_score = scores_[i] * static_cast<double>(l_);
      out.push_back(wire::encode(wire::RoundMessage{c.round, static_cast<std::uint32_t>(i + 1), pk_.key_id, u}));
    }
    return out;
  }

 private:
  paillier::PublicKey pk_;
  std::vector<double> scores_;
  std::uint64_t l_;
};

Outcome threshold_boundary() {
  Rng rng(7);
  const auto k = paillier::generate_keypair(128, rng);
  const FixedPointCodec codec(k.pub.n);
  const double t = 0.05;
  const std::uint64_t l = 1024;  // power of two: score * l / l is exact
  const std::vector<double> w = {0.3, -0.4};
  auto enc = [&](const std::vector<double>& v) {
    return kernels::serial::encrypt(k.pub, kernels::encode_all(codec, v), 1);
  };

  protocol::ServerConfig scfg;
  scfg.schedule = protocol::ThresholdSchedule::fixed_at(t);
  scfg.fixed_blinding_factor = l;
  protocol::Server server(k.pub, scfg);
  server.accept_init(wire::RoundMessage{0, wire::kInitiatorId, k.pub.key_id, wire::InitParams{enc(w)}});
  wire::InitiatorUpdate update{enc(w), similarity::encrypt_component(k.pub, similarity::normalize_weights(w), codec, rng)};
  BoundaryChannel channel(k.pub, {t, std::nextafter(t, 1.0), std::nextafter(t, 0.0)}, l);
  server.server_round(wire::RoundMessage{1, wire::kInitiatorId, k.pub.key_id, update}, channel);
  const auto& log = server.state().score_log;
  const bool ok = log.size() == 3 && log[0].score == t && !log[0].included && log[1].included && !log[2].included;
  return {ok, std::string("score == T ") + (log[0].included ? "included" : "excluded") + ", next float above T " +
                  (log[1].included ? "included" : "excluded")};
}

Outcome timing_order() {
  auto cfg = config::TrainingRunConfig::defaults();
  cfg.crypto.key_bits = 1024;
  const auto rows = run::measure_similarity_timing(cfg, 3);
  double initiator = 0, participant = 0, server = 0;
  for (const auto& r : rows) {
    if (r.entity == "Model Initiator") initiator = r.seconds;
    if (r.entity == "Participant") participant = r.seconds;
    if (r.entity == "Server") server = r.seconds;
  }
  return {server < participant && participant < initiator,
          fmt("1024-bit keys: initiator %.4f s, participant %.4f s, server %.4f s", initiator, participant, server)};
}

}  // namespace

int main() {
  report(1, "paillier laws", 30, paillier_laws);
  report(2, "encrypted similarity oracle", 120, similarity_oracle);
  report(3, "gradient checks", 0, gradient_checks);
  report(4, "plaintext shadow equivalence", 180, shadow_equivalence);

  const auto cfg = config::TrainingRunConfig::defaults();
  FederatedRun fed;
  double filtered_accuracy = std::nan("");
  Stopwatch fed_clock;
  try {
    fed = filtered_run(cfg);
    filtered_accuracy = fed.report.rounds.back().accuracy;
  } catch (const std::exception& e) {
    fed.filtering = {false, std::string("exception: ") + e.what()};
    fed.hygiene = fed.filtering;
  }
  const double fed_s = fed_clock.seconds();
  report(5, "filtering behavior", 0, [&] { return fed.filtering; });
  report(6, "robustness ordering", 600 - fed_s, [&] { return ordering(filtered_accuracy); });
  report(7, "threshold boundary", 0, threshold_boundary);
  report(8, "key hygiene", 0, [&] { return fed.hygiene; });
  report(9, "timing order", 0, timing_order);

  std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
