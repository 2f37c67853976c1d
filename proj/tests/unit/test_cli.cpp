#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cli.hpp"
#include "fixtures.hpp"
#include "sants/checkpoint.hpp"

namespace fs = std::filesystem;
using sants::testing::scratch_dir;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = sants::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream b;
    b << in.rdbuf();
    return b.str();
}

// Small network and short budgets so CLI round trips stay fast.
std::vector<std::string> small(std::vector<std::string> args) {
    for (const char* s : {"trainer.hidden1=16", "trainer.hidden2=8", "diagnostics.validation_episodes=4",
                          "trainer.eval_interval=5", "diagnostics.eval_episodes=6", "diagnostics.rollout_episodes=5",
                          "diagnostics.scan_episodes=8"}) {
        args.push_back("--set");
        args.push_back(s);
    }
    return args;
}

double field(const std::string& line, const std::string& key) {
    const auto pos = line.find(key + "=");
    if (pos == std::string::npos) throw std::runtime_error("missing " + key + " in " + line);
    return std::stod(line.substr(pos + key.size() + 1));
}

}  // namespace

TEST(Cli, ExitCodes) {
    const auto dir = scratch_dir("cli_codes");
    EXPECT_EQ(run({"train", "--config", (dir / "missing.cfg").string(), "--run-dir", dir.string()}).code, 2);
    EXPECT_EQ(run({"train", "--bogus-flag"}).code, 2);
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"train", "--run-dir", dir.string(), "--set", "trainer.nonexistent=1"}).code, 2);
    {
        std::ofstream(dir / "bad.ckpt") << "not a checkpoint";
    }
    const auto r = run({"rollout", "--run-dir", dir.string(), "--checkpoint", (dir / "bad.ckpt").string()});
    EXPECT_EQ(r.code, 4);
    EXPECT_NE(r.err.find("data error"), std::string::npos);
    EXPECT_EQ(run({"--version"}).code, 0);
}

TEST(Cli, ZeroUpdateTrainKeepsInitialWeights) {
    const auto dir = scratch_dir("cli_train0");
    const auto r = run(small({"train", "--run-dir", dir.string(), "--updates", "0"}));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto init = slurp(dir / "init.ckpt");
    EXPECT_FALSE(init.empty());
    EXPECT_EQ(slurp(dir / "final.ckpt"), init);
    EXPECT_EQ(slurp(dir / "best.ckpt"), init);
    EXPECT_EQ(slurp(dir / "train_log.jsonl"), "");
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest-train.json"));
    EXPECT_EQ(manifest["status"], "ok");
    EXPECT_EQ(manifest["seed"], sants::testing::kSeed);
}

TEST(Cli, AlwaysStopCheckpointUsesOneUpdate) {
    const auto dir = scratch_dir("cli_stop");
    ASSERT_EQ(run(small({"init-checkpoint", "--run-dir", dir.string(), "--always-stop", "--output", "stop.ckpt"})).code,
              0);
    const auto r = run(small({"rollout", "--run-dir", dir.string(), "--checkpoint", (dir / "stop.ckpt").string()}));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(field(r.out, "mean_n_updates"), 1.0);
    EXPECT_EQ(field(r.out, "episodes"), 5.0);
    EXPECT_TRUE(fs::exists(dir / "rollout_traces.csv"));
}

TEST(Cli, DepthScanThenStats) {
    const auto dir = scratch_dir("cli_scan");
    const auto scan = run(small({"depth-scan", "--run-dir", dir.string()}));
    ASSERT_EQ(scan.code, 0) << scan.err;
    EXPECT_EQ(field(scan.out, "rows"), 8.0);
    const auto stats = run(small({"stats", "--run-dir", dir.string()}));
    ASSERT_EQ(stats.code, 0) << stats.err;
    EXPECT_NE(stats.out.find("stats: all rows=8"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "scan_stats.csv"));
    EXPECT_EQ(run({"stats", "--run-dir", dir.string(), "--input", (dir / "nope.csv").string()}).code, 4);
}

TEST(Cli, AblateFixedVariants) {
    const auto dir = scratch_dir("cli_ablate");
    const auto r = run(small({"ablate", "--run-dir", dir.string(), "--variants", "fixed_full,fixed_k", "--k", "3"}));
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream lines(r.out);
    std::string full, k3;
    std::getline(lines, full);
    std::getline(lines, k3);
    EXPECT_NE(full.find("ablate: fixed_full "), std::string::npos);
    EXPECT_EQ(field(full, "mean_n_updates"), 25.0);
    EXPECT_NE(k3.find("ablate: fixed_k=3 "), std::string::npos);
    EXPECT_EQ(field(k3, "mean_n_updates"), 3.0);
    EXPECT_EQ(run(small({"ablate", "--run-dir", dir.string(), "--variants", "nonsense"})).code, 2);
}

TEST(Cli, RerunsAreByteIdenticalAndReplayable) {
    const auto a = scratch_dir("cli_rep_a"), b = scratch_dir("cli_rep_b"), c = scratch_dir("cli_rep_c");
    const auto args = [](const fs::path& d) { return small({"train", "--run-dir", d.string(), "--updates", "12"}); };
    ASSERT_EQ(run(args(a)).code, 0);
    ASSERT_EQ(run(args(b)).code, 0);
    for (const char* f : {"init.ckpt", "final.ckpt", "best.ckpt", "train_log.jsonl", "config-train.snapshot"}) {
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    const auto r = run({"replay", "--manifest", (a / "manifest-train.json").string(), "--run-dir", c.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"final.ckpt", "train_log.jsonl", "config-train.snapshot"}) {
        EXPECT_EQ(slurp(a / f), slurp(c / f)) << f;
    }
}

TEST(Cli, FlagBeatsEnvironment) {
    const auto dir = scratch_dir("cli_env");
    ::setenv("SANTS_SEED", "111", 1);
    ASSERT_EQ(run(small({"init-checkpoint", "--run-dir", dir.string(), "--output", "env.ckpt"})).code, 0);
    EXPECT_EQ(nlohmann::json::parse(slurp(dir / "manifest-init-checkpoint.json"))["seed"], 111);
    ASSERT_EQ(run(small({"init-checkpoint", "--run-dir", dir.string(), "--seed", "222", "--output", "flag.ckpt"})).code,
              0);
    EXPECT_EQ(nlohmann::json::parse(slurp(dir / "manifest-init-checkpoint.json"))["seed"], 222);
    ::unsetenv("SANTS_SEED");
    EXPECT_NE(slurp(dir / "env.ckpt"), slurp(dir / "flag.ckpt"));
}
