#include <gtest/gtest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string err;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ajam_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Result run(const std::string& args, const fs::path& work) {
  const fs::path err = work / "stderr.txt";
  const std::string cmd = std::string("cd '") + work.string() + "' && '" AJAM_CLI_PATH "' " + args + " >'" +
                          (work / "stdout.txt").string() + "' 2>'" + err.string() + "'";
  const int st = std::system(cmd.c_str());
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, slurp(err)};
}

std::size_t line_count(const fs::path& p) {
  std::ifstream f(p);
  std::size_t n = 0;
  for (std::string l; std::getline(f, l);) ++n;
  return n;
}

bool staging_left(const fs::path& out) {
  if (!fs::exists(out)) return false;
  for (const auto& e : fs::directory_iterator(out))
    if (e.path().filename().string().rfind(".staging", 0) == 0) return true;
  return false;
}

}  // namespace

TEST(Cli, VersionAndUsage) {
  const fs::path w = scratch("usage");
  EXPECT_EQ(run("--version", w).code, 0);
  EXPECT_NE(slurp(w / "stdout.txt").find("0.3.0"), std::string::npos);
  EXPECT_EQ(run("", w).code, 2);
  EXPECT_EQ(run("train --algo zzz", w).code, 2);
  EXPECT_EQ(run("eval --runs 0", w).code, 2);
  EXPECT_EQ(run("frobnicate", w).code, 2);
  EXPECT_EQ(run("sweep --algo mt,bogus", w).code, 2);
}

TEST(Cli, TrainOneEpisodeWritesCheckpoint) {
  const fs::path w = scratch("train");
  const Result r = run("train --episodes 1 --seed 3 --out out", w);
  ASSERT_EQ(r.code, 0) << r.err;
  const fs::path dir = w / "out" / "checkpoints" / "mt";
  for (const char* f : {"frequency.current.ajqn", "frequency.target.ajqn", "power.current.ajqn", "power.target.ajqn",
                        "modulation.current.ajqn", "modulation.target.ajqn", "manifest.json", "training_log.csv"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_EQ(line_count(dir / "training_log.csv"), 2u);
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(m.at("subcommand"), "train");
  EXPECT_EQ(m.at("seed"), 3);
  EXPECT_EQ(m.at("algorithm"), "mt");
  EXPECT_EQ(m.at("config_hash").get<std::string>().size(), 16u);
  EXPECT_FALSE(staging_left(w / "out"));
}

TEST(Cli, SweepWithoutCheckpointFailsCleanly) {
  const fs::path w = scratch("nockpt");
  const Result r = run("sweep --out out --runs 2", w);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("missing checkpoint"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(w / "out" / "sweep"));
  EXPECT_FALSE(staging_left(w / "out"));
  EXPECT_EQ(run("dump-q --out out", w).code, 1);
  EXPECT_FALSE(fs::exists(w / "out" / "dump-q"));
}

TEST(Cli, ConfigErrorsExitTwoAndNameTheKey) {
  const fs::path w = scratch("badcfg");
  {
    std::ofstream f(w / "bad.toml");
    f << "[timescale]\nlong_ms = 4\n";
  }
  const Result r = run("train --config bad.toml --episodes 1", w);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("timescale.long_ms"), std::string::npos) << r.err;
  EXPECT_EQ(run("train --config missing.toml", w).code, 2);
}

TEST(Cli, ShippedConfigIsAccepted) {
  const fs::path w = scratch("shipped");
  EXPECT_EQ(run("probe --config '" AJAM_SOURCE_DIR "/configs/reference.toml' --runs 50 --out out", w).code, 0);
}

TEST(Cli, BaselineEvalNeedsNoCheckpoint) {
  const fs::path w = scratch("baseline");
  const Result r = run("eval --algo random --runs 2 --eps 0,10 --out out", w);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(line_count(w / "out" / "eval" / "random" / "episodes.csv"), 1u + 4u * 30u);
  EXPECT_EQ(line_count(w / "out" / "eval" / "random" / "summary.csv"), 1u + 4u);
}

TEST(Cli, ProbeReportsContraction) {
  const fs::path w = scratch("probe");
  ASSERT_EQ(run("probe --runs 200 --out out", w).code, 0);
  const auto j = nlohmann::json::parse(slurp(w / "out" / "probe" / "contraction.json"));
  EXPECT_TRUE(j.at("contraction_holds").get<bool>());
  EXPECT_LE(j.at("max_ratio").get<double>(), 0.3 + 1e-9);
  EXPECT_LE(j.at("fixed_point_spread_10_inits").get<double>(), 1e-8);
}

TEST(Cli, PipelineIsByteIdenticalAcrossReruns) {
  const fs::path w = scratch("rerun");
  const std::vector<std::string> files{"checkpoints/mt/power.current.ajqn", "checkpoints/mt/training_log.csv",
                                       "checkpoints/nqc/modulation.current.ajqn", "checkpoints/mt/manifest.json",
                                       "sweep/sweep.csv", "sweep/accuracy.csv", "sweep/boxstats.csv",
                                       "eval/mt/episodes.csv", "dump-q/nqc/qdump.csv"};
  auto pipeline = [&]() {
    EXPECT_EQ(run("train --algo mt --episodes 3 --out out", w).code, 0);
    EXPECT_EQ(run("train --algo nqc --episodes 3 --out out", w).code, 0);
    EXPECT_EQ(run("sweep --algo mt,nqc,random --eps 0,10 --runs 3 --out out", w).code, 0);
    EXPECT_EQ(run("eval --algo mt --eps 5 --runs 2 --out out", w).code, 0);
    EXPECT_EQ(run("dump-q --algo nqc --eps 10 --out out", w).code, 0);
    std::vector<std::string> bytes;
    for (const auto& f : files) bytes.push_back(slurp(w / "out" / f));
    return bytes;
  };
  const auto first = pipeline();
  fs::remove_all(w / "out");
  const auto second = pipeline();
  for (std::size_t i = 0; i < files.size(); ++i) {
    EXPECT_FALSE(first[i].empty()) << files[i];
    EXPECT_EQ(first[i], second[i]) << files[i];
  }
  EXPECT_EQ(line_count(w / "out" / "sweep" / "sweep.csv"), 1u + 3u * 2u * 3u);
  EXPECT_EQ(line_count(w / "out" / "dump-q" / "nqc" / "qdump.csv"), 1u + 350u);
}

TEST(Cli, DifferentSeedsDiffer) {
  const fs::path w = scratch("seeds");
  ASSERT_EQ(run("train --episodes 1 --seed 1 --out a", w).code, 0);
  ASSERT_EQ(run("train --episodes 1 --seed 2 --out b", w).code, 0);
  EXPECT_NE(slurp(w / "a/checkpoints/mt/frequency.current.ajqn"), slurp(w / "b/checkpoints/mt/frequency.current.ajqn"));
}

TEST(Cli, AblateWritesOneRowPerVariantAndSeed) {
  const fs::path w = scratch("ablate");
  ASSERT_EQ(run("ablate --episodes 1 --runs 1 --seeds 2 --out out", w).code, 0);
  EXPECT_EQ(line_count(w / "out" / "ablate" / "ablation.csv"), 1u + 4u * 2u);
}
