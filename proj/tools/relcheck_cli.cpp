#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "relcheck/config.hpp"
#include "relcheck/errors.hpp"
#include "relcheck/harness.hpp"
#include "relcheck/paillier.hpp"
#include "relcheck/random.hpp"
#include "relcheck/run.hpp"

namespace {

using namespace relcheck;

constexpr int kExitUsage = 2;
constexpr unsigned kLargeKeyBits = 1024;

config::TrainingRunConfig load_or_default(const std::string& path) {
  return path.empty() ? config::TrainingRunConfig::defaults() : config::load_config(path);
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw Error("cannot write " + out_path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-preserving multi-party training with participant reliability checks"};
  app.require_subcommand(1);

  auto* keygen = app.add_subcommand("keygen", "Generate a Paillier key pair (<out>.pub and <out>.key)");
  unsigned key_bits = paillier::kDefaultKeyBits;
  std::string key_out;
  std::uint64_t key_seed = 0;
  bool key_seed_set = false;
  bool keygen_large = false;
  keygen->add_option("--key-bits", key_bits, "Modulus size in bits")->capture_default_str();
  keygen->add_option("--out", key_out, "Output path stem")->required();
  keygen->add_option("--seed", key_seed, "Deterministic seed (omit for a random device seed)")
      ->each([&](const std::string&) { key_seed_set = true; });
  keygen->add_flag("--paper-keys", keygen_large, "Use 1024-bit keys");

  auto* run_cmd = app.add_subcommand("run", "Run one training configuration and write metrics");
  std::string config_path;
  std::string out_dir = "out";
  std::string mode_override;
  std::optional<std::uint64_t> seed_override;
  bool run_large = false;
  std::optional<std::uint32_t> rounds_override;
  run_cmd->add_option("--config", config_path, "JSON config file (defaults if omitted)");
  run_cmd->add_option("--out-dir", out_dir, "Directory for metrics.csv, timings.csv, summary.json")
      ->capture_default_str();
  run_cmd->add_option("--mode", mode_override, "filtered | nofilter | centralized | standalone");
  run_cmd->add_option("--seed-override", seed_override, "Derive data/init/crypto seeds from this value");
  run_cmd->add_option("--rounds", rounds_override, "Override max_rounds");
  run_cmd->add_flag("--paper-keys", run_large, "Use 1024-bit keys");

  auto* report_cmd = app.add_subcommand("report", "Align metrics files from several runs");
  std::vector<std::string> metrics_paths;
  std::string report_out;
  std::string series_out;
  report_cmd->add_option("metrics", metrics_paths, "metrics.csv files")->required();
  report_cmd->add_option("--out", report_out, "Write the table here instead of stdout");
  report_cmd->add_option("--series-out", series_out, "Also write long-format plot series");

  auto* timing_cmd = app.add_subcommand("timing", "Time the similarity computation per entity");
  std::string timing_config;
  std::size_t repetitions = 3;
  bool timing_large = false;
  std::string timing_out;
  timing_cmd->add_option("--config", timing_config, "JSON config file (defaults if omitted)");
  timing_cmd->add_option("--repetitions", repetitions, "Rounds to average over")->capture_default_str();
  timing_cmd->add_flag("--paper-keys", timing_large, "Use 1024-bit keys");
  timing_cmd->add_option("--out", timing_out, "Write the table here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; every other parse failure is a usage error.
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*keygen) {
      if (keygen_large) key_bits = kLargeKeyBits;
      if (!key_seed_set) key_seed = std::random_device{}();
      Rng rng = derive_rng(key_seed, Stream::kKeygen, 0);
      const auto keys = paillier::generate_keypair(key_bits, rng);
      paillier::write_key_files(keys, key_out);
      std::cout << "wrote " << key_out << ".pub and " << key_out << ".key (" << key_bits << " bits, key id "
                << keys.pub.key_id << ")\n";
    } else if (*run_cmd) {
      auto cfg = load_or_default(config_path);
      if (!mode_override.empty()) cfg.mode = config::parse_mode(mode_override);
      if (seed_override) config::override_seeds(cfg, *seed_override);
      if (rounds_override) cfg.max_rounds = *rounds_override;
      if (run_large) cfg.crypto.key_bits = kLargeKeyBits;
      cfg.validate();
      const auto report = run::run_training(cfg);
      harness::write_run_outputs(report, cfg, out_dir);
      const double acc = report.rounds.empty() ? report.initial.accuracy : report.rounds.back().accuracy;
      std::printf("%s: %zu rounds (%s), final accuracy %.4f -> %s\n", config::to_string(cfg.mode).c_str(),
                  report.rounds.size(), report.stop_reason.c_str(), acc, out_dir.c_str());
    } else if (*report_cmd) {
      std::vector<harness::MetricsFile> files;
      for (const auto& p : metrics_paths) files.push_back(harness::read_metrics(p));
      // Labels come from the parent directory; fall back to positions if they clash.
      for (std::size_t i = 0; i < files.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
          if (files[j].label == files[i].label) files[i].label += "#" + std::to_string(i + 1);
        }
      }
      emit(harness::report_table(files), report_out);
      if (!series_out.empty()) emit(harness::plot_series(files), series_out);
    } else if (*timing_cmd) {
      auto cfg = load_or_default(timing_config);
      if (timing_large) cfg.crypto.key_bits = kLargeKeyBits;
      cfg.validate();
      emit(harness::timing_table(run::measure_similarity_timing(cfg, repetitions), repetitions), timing_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
