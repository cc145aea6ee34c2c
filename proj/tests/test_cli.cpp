#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "relcheck/paillier.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = RELCHECK_CLI;

int run_cli(const std::string& args) {
  const std::string cmd = "\"" + kCli + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("relcheck_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("keygen --key-bits 32 --out " + path("k")), 2);
  EXPECT_EQ(run_cli("run --mode sideways --out-dir " + path("o")), 2);
}

TEST_F(Cli, BadConfigExitsTwo) {
  std::ofstream(path("bad.json")) << R"({"train": {"batch_size": 0}})";
  EXPECT_EQ(run_cli("run --config " + path("bad.json") + " --out-dir " + path("o")), 2);
  std::ofstream(path("typo.json")) << R"({"max_round": 3})";
  EXPECT_EQ(run_cli("run --config " + path("typo.json") + " --out-dir " + path("o")), 2);
}

TEST_F(Cli, KeygenIsDeterministicUnderSeed) {
  ASSERT_EQ(run_cli("keygen --key-bits 128 --seed 7 --out " + path("a")), 0);
  ASSERT_EQ(run_cli("keygen --key-bits 128 --seed 7 --out " + path("b")), 0);
  EXPECT_EQ(slurp(path("a.pub")), slurp(path("b.pub")));
  EXPECT_EQ(slurp(path("a.key")), slurp(path("b.key")));

  using namespace relcheck;
  const auto pk = paillier::read_public_key(path("a.pub"));
  const auto sk = paillier::read_private_key(path("a.key"));
  EXPECT_EQ(pk.key_bits, 128u);
  Rng rng(1);
  EXPECT_EQ(paillier::decrypt(sk, paillier::encrypt(pk, 31337, rng)), 31337);
}

TEST_F(Cli, RunThenReport) {
  std::ofstream(path("cfg.json")) << R"({"max_rounds": 2, "crypto": {"key_bits": 128}, "train": {"local_epochs": 1}})";
  ASSERT_EQ(run_cli("run --config " + path("cfg.json") + " --out-dir " + path("f")), 0);
  ASSERT_EQ(run_cli("run --config " + path("cfg.json") + " --mode centralized --out-dir " + path("c")), 0);
  for (const char* f : {"metrics.csv", "timings.csv", "summary.json"}) EXPECT_TRUE(fs::exists(dir_ / "f" / f)) << f;

  ASSERT_EQ(run_cli("report " + path("f/metrics.csv") + " --out " + path("single.csv")), 0);
  EXPECT_EQ(slurp(path("single.csv")), slurp(path("f/metrics.csv")));
  ASSERT_EQ(run_cli("report " + path("f/metrics.csv") + " " + path("c/metrics.csv") + " --out " + path("both.csv") +
                    " --series-out " + path("series.csv")),
            0);
  const auto both = slurp(path("both.csv"));
  EXPECT_NE(both.find("f:accuracy"), std::string::npos);
  EXPECT_NE(both.find("c:accuracy"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("series.csv")));
}

TEST_F(Cli, SeedOverrideChangesRunAndRepeats) {
  std::ofstream(path("cfg.json")) << R"({"max_rounds": 1, "crypto": {"key_bits": 128}, "train": {"local_epochs": 1}})";
  const std::string base = "run --config " + path("cfg.json") + " --seed-override ";
  ASSERT_EQ(run_cli(base + "5 --out-dir " + path("a")), 0);
  ASSERT_EQ(run_cli(base + "5 --out-dir " + path("b")), 0);
  ASSERT_EQ(run_cli(base + "6 --out-dir " + path("c")), 0);
  EXPECT_EQ(slurp(path("a/metrics.csv")), slurp(path("b/metrics.csv")));
  EXPECT_NE(slurp(path("a/metrics.csv")), slurp(path("c/metrics.csv")));
}

TEST_F(Cli, MissingReportInputFails) {
  EXPECT_NE(run_cli("report " + path("nope.csv")), 0);
}

TEST_F(Cli, TimingTable) {
  std::ofstream(path("cfg.json")) << R"({"crypto": {"key_bits": 128}, "train": {"local_epochs": 1}})";
  ASSERT_EQ(run_cli("timing --config " + path("cfg.json") + " --repetitions 1 --out " + path("t.txt")), 0);
  const auto t = slurp(path("t.txt"));
  for (const char* who : {"Model Initiator", "Participant", "Server"}) EXPECT_NE(t.find(who), std::string::npos) << who;
}
