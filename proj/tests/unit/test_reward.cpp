#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sants/grid.hpp"
#include "sants/reward.hpp"
#include "sants/scheduler.hpp"

using namespace sants;
using sants::testing::default_policy;
using sants::testing::random_chunk;

namespace {

ActionChunk static_chunk(int T, double gripper = 0.0) {
    std::vector<ActionStep> steps(static_cast<std::size_t>(T));
    for (auto& s : steps) s.gripper = gripper;
    return ActionChunk(std::move(steps));
}

ActionChunk with_gripper_step(int T, int at, double before, double after) {
    std::vector<ActionStep> steps(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) steps[static_cast<std::size_t>(t)].gripper = t < at ? before : after;
    return ActionChunk(std::move(steps));
}

ActionChunk map_chunk(const ActionChunk& c, const std::function<void(ActionStep&, std::size_t)>& f) {
    auto steps = c.steps();
    for (std::size_t t = 0; t < steps.size(); ++t) f(steps[t], t);
    return ActionChunk(std::move(steps));
}

std::vector<double> uniform(std::size_t T) { return std::vector<double>(T, 1.0); }

}  // namespace

TEST(KeyframeWeights, StaticDemoIsUniform) {
    const auto w = keyframe_weights(static_chunk(16, 0.4), RewardConfig{});
    for (double v : w) EXPECT_EQ(v, 1.0);
}

TEST(KeyframeWeights, GripperEventUpweightsOneStep) {
    const auto w = keyframe_weights(with_gripper_step(16, 5, 0.1, 0.4), RewardConfig{});
    const double mean = (15.0 + 2.8) / 16.0;
    for (int t = 0; t < 16; ++t) EXPECT_NEAR(w[static_cast<std::size_t>(t)], (t == 5 ? 2.8 : 1.0) / mean, 1e-15);
}

TEST(KeyframeWeights, ThresholdIsStrict) {
    const auto w = keyframe_weights(with_gripper_step(16, 5, 0.25, 0.5), RewardConfig{});
    for (double v : w) EXPECT_EQ(v, 1.0);
}

TEST(KeyframeWeights, EarlyEmphasis) {
    RewardConfig cfg;
    cfg.eta_early = 1.0;
    const auto w = keyframe_weights(static_chunk(16), cfg);
    const double mean = (4 * 2.0 + 12 * 1.0) / 16.0;
    for (int t = 0; t < 16; ++t) EXPECT_NEAR(w[static_cast<std::size_t>(t)], (t < 4 ? 2.0 : 1.0) / mean, 1e-15);
}

TEST(SeqError, IdentityWithSaturatedGrippers) {
    const auto demo = with_gripper_step(16, 8, 0.0, 1.0);
    EXPECT_LE(seq_error(demo, demo, uniform(16), RewardConfig{}), 1e-4);
}

TEST(SeqError, UnitShiftAddsOne) {
    std::mt19937_64 rng(1);
    const auto demo = random_chunk(rng);
    const auto shifted = map_chunk(demo, [](ActionStep& s, std::size_t) { s.position.x() += 1.0; });
    const RewardConfig cfg;
    EXPECT_NEAR(seq_error(shifted, demo, uniform(16), cfg) - seq_error(demo, demo, uniform(16), cfg), 1.0, 1e-12);
}

TEST(SeqError, QuaternionDoubleCover) {
    std::mt19937_64 rng(2);
    const auto demo = random_chunk(rng);
    const auto negated = map_chunk(demo, [](ActionStep& s, std::size_t) { s.orientation = -s.orientation; });
    RewardConfig cfg;
    cfg.seq_weights = {0.0, 1.0, 0.0};
    EXPECT_NEAR(seq_error(negated, demo, uniform(16), cfg), 0.0, 1e-12);
}

TEST(DeltaError, Examples) {
    std::mt19937_64 rng(3);
    const auto demo = random_chunk(rng);
    const RewardConfig cfg;
    EXPECT_EQ(delta_error(demo, demo, uniform(16), cfg), 0.0);

    RewardConfig pos_only = cfg;
    pos_only.delta_weights = {1.0, 0.0, 0.0};
    const auto offset = map_chunk(demo, [](ActionStep& s, std::size_t) { s.position += Eigen::Vector3d(1, -2, 3); });
    EXPECT_NEAR(delta_error(offset, demo, uniform(16), pos_only), 0.0, 1e-12);

    const auto doubled = map_chunk(demo, [&demo](ActionStep& s, std::size_t t) {
        s.position = demo[0].position + 2.0 * (demo[t].position - demo[0].position);
    });
    double expected = 0.0;
    for (std::size_t t = 0; t + 1 < 16; ++t) expected += (demo[t + 1].position - demo[t].position).squaredNorm();
    expected /= 15.0;
    EXPECT_NEAR(delta_error(doubled, demo, uniform(16), pos_only), expected, 1e-12);
}

TEST(AnchorGain, Examples) {
    EXPECT_NEAR(anchor_gain(1.0, 0.4, 0.4, 1e-3), 1.0, 1e-15);
    EXPECT_EQ(anchor_gain(1.0, 0.4, 1.0, 1e-3), 0.0);
    EXPECT_EQ(anchor_gain(1.0, 0.4, 1.9, 1e-3), -1.0);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const double g = anchor_gain(u(rng), u(rng), u(rng), 1e-3);
        EXPECT_GE(g, -1.0);
        EXPECT_LE(g, 1.0);
    }
}

TEST(DifficultyGate, Examples) {
    EXPECT_EQ(difficulty_gate(0.5, 0.5, 0.02), 0.0);
    EXPECT_NEAR(difficulty_gate(1.02, 1.0, 0.02), 0.5, 1e-12);
    EXPECT_EQ(difficulty_gate(0.4, 0.9, 0.02), 0.0);
    EXPECT_LT(difficulty_gate(1e9, 0.0, 0.02), 1.0);
    EXPECT_THROW(difficulty_gate(1.0, 0.0, 0.0), std::invalid_argument);
}

TEST(QualityTerm, Examples) {
    const RewardConfig cfg;
    EXPECT_DOUBLE_EQ(quality_term(1.0, 0.0, 0.9, 0.7, cfg), 0.6 * 0.9);
    EXPECT_EQ(quality_term(0.0, 0.0, 0.9, 0.9, cfg), 0.0);
    EXPECT_DOUBLE_EQ(quality_term(-1.0, 0.0, 0.0, 0.0, cfg), -0.6);
    EXPECT_DOUBLE_EQ(quality_term(-1.0, 0.0, 0.9, 0.0, cfg), -0.6);
}

TEST(UpdateCost, Examples) {
    const RewardConfig cfg;
    EXPECT_EQ(update_cost(0, 25, cfg).cost, 0.0);
    EXPECT_DOUBLE_EQ(update_cost(5, 50, cfg).cost, 0.025);
    for (int n = 0; n <= 25; ++n) EXPECT_NEAR(update_cost(n, 25, cfg).cost, 0.25 * n / 25.0, 1e-15);
    RewardConfig quad = cfg;
    quad.c1 = 1.0;
    EXPECT_DOUBLE_EQ(update_cost(25, 25, quad).cost, quad.lambda_c);
    const auto over = update_cost(30, 25, cfg);
    EXPECT_TRUE(over.clamped);
    EXPECT_DOUBLE_EQ(over.cost, cfg.lambda_c);
    EXPECT_THROW(update_cost(-1, 25, cfg), std::invalid_argument);
}

TEST(UpdateCost, MonotoneUnderRandomSchedules) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        RewardConfig cfg;
        cfg.c0 = u(rng);
        cfg.c1 = u(rng);
        cfg.gamma = u(rng);
        double prev = 0.0;
        for (int n = 0; n <= 25; ++n) {
            const double c = update_cost(n, 25, cfg).cost;
            EXPECT_GE(c, prev);
            prev = c;
        }
        EXPECT_NEAR(prev, cfg.lambda_c, 1e-12);
    }
}

class PathReturnTest : public ::testing::Test {
  protected:
    SchedulerConfig sched;
    RewardConfig reward;
    const SyntheticPolicy& policy = default_policy();
};

TEST_F(PathReturnTest, ShallowAnchorPathScoresZeroGain) {
    const auto ep = policy.make_episode(11, Phase::Fine, Corruption::None);
    const auto noise = policy.initial_noise(ep);
    const auto anchors = compute_anchors(policy, ep, noise, sched, reward);
    const double shallow[] = {sched.sigma_start, reward.sigma_lo};
    const auto t = run_fixed_levels(policy, ep, shallow, noise);
    const auto r = path_return(t, ep, policy, noise, anchors, sched.n_full, reward);
    EXPECT_EQ(r.u_seq, 0.0);
    EXPECT_EQ(r.u_delta, 0.0);
    EXPECT_EQ(r.ret, -update_cost(1, sched.n_full, reward).cost);
}

TEST_F(PathReturnTest, FullAnchorPathScoresMaxQuality) {
    const auto ep = policy.make_episode(12, Phase::Fine, Corruption::None);
    const auto noise = policy.initial_noise(ep);
    const auto anchors = compute_anchors(policy, ep, noise, sched, reward);
    const auto t = run_fixed_levels(policy, ep, build_full_grid(sched), noise);
    const auto r = path_return(t, ep, policy, noise, anchors, sched.n_full, reward);
    ASSERT_GT(r.seq_lo - r.seq_hi, reward.epsilon);
    ASSERT_GT(r.delta_lo - r.delta_hi, reward.epsilon);
    EXPECT_EQ(r.u_seq, 1.0);
    EXPECT_EQ(r.u_delta, 1.0);
    EXPECT_NEAR(r.ret, reward.w_seq * r.d_seq + reward.w_delta * r.d_delta - reward.lambda_c, 1e-15);
}

TEST_F(PathReturnTest, ReturnIsQualityMinusCost) {
    std::mt19937_64 rng(6);
    for (int i = 0; i < 200; ++i) {
        const auto ep = policy.sample_episode(static_cast<std::uint64_t>(i));
        const AnchorCache anchors{ep.seed, 0, random_chunk(rng, 16, 0.3), random_chunk(rng, 16, 0.1)};
        const auto r = path_return(random_chunk(rng, 16, 0.2), i % 30, ep, anchors, sched.n_full, reward);
        EXPECT_EQ(r.ret, r.quality - r.cost);
        EXPECT_LT(r.d_seq, 1.0);
        EXPECT_LT(r.d_delta, 1.0);
    }
}

TEST_F(PathReturnTest, MismatchedAnchorsRejected) {
    const auto ep = policy.sample_episode(13);
    const auto other = policy.sample_episode(14);
    const auto noise = policy.initial_noise(ep);
    const auto anchors = compute_anchors(policy, other, policy.initial_noise(other), sched, reward);
    const auto t = run_fixed_levels(policy, ep, build_full_grid(sched), noise);
    EXPECT_THROW(path_return(t, ep, policy, noise, anchors, sched.n_full, reward), std::invalid_argument);
    auto same_seed = compute_anchors(policy, ep, noise, sched, reward);
    LatentState other_noise = noise;
    other_noise[0] += 1.0;
    EXPECT_THROW(path_return(t, ep, policy, other_noise, same_seed, sched.n_full, reward), std::invalid_argument);
}

TEST_F(PathReturnTest, QualityMonotoneInTauError) {
    std::mt19937_64 rng(7);
    const auto ep = policy.sample_episode(15);
    const AnchorCache anchors{ep.seed, 0, random_chunk(rng, 16, 0.5), random_chunk(rng, 16, 0.05)};
    const auto base = random_chunk(rng, 16, 0.1);
    double prev = 1e9;
    for (double shift = 0.0; shift < 2.0; shift += 0.05) {
        const auto pred = map_chunk(base, [shift](ActionStep& s, std::size_t) { s.position.x() += shift; });
        const double q = path_return(pred, 5, ep, anchors, sched.n_full, reward).quality;
        EXPECT_LE(q, prev + 1e-15);
        prev = q;
    }
}

TEST_F(PathReturnTest, NegativeGapZeroesPositiveContribution) {
    std::mt19937_64 rng(8);
    const auto ep = policy.sample_episode(16);
    // Full anchor worse than the shallow one for both metrics.
    const AnchorCache anchors{ep.seed, 0, ep.demo, random_chunk(rng, 16, 0.5)};
    const auto better = map_chunk(ep.demo, [](ActionStep& s, std::size_t) { s.position.x() += 0.01; });
    const auto r = path_return(better, 3, ep, anchors, sched.n_full, reward);
    EXPECT_EQ(r.d_seq, 0.0);
    EXPECT_EQ(r.d_delta, 0.0);
    EXPECT_LE(r.quality, 0.0);
}

TEST_F(PathReturnTest, MatchesIndependentOracle) {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> n_dist(0, 40);
    std::uniform_real_distribution<double> scale(0.001, 0.6);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto ep = policy.sample_episode(static_cast<std::uint64_t>(1000 + i));
        const auto perturb = [&](double s) {
            const auto noise = random_chunk(rng, 16, 1.0);
            return map_chunk(ep.demo, [&](ActionStep& st, std::size_t t) {
                st.position += s * noise[t].position;
                st.orientation += s * noise[t].orientation;
                st.gripper += s * (noise[t].gripper - 0.5);
            });
        };
        const AnchorCache anchors{ep.seed, 0, perturb(scale(rng)), perturb(scale(rng))};
        const auto pred = perturb(scale(rng));
        const int n = n_dist(rng);
        const double got = path_return(pred, n, ep, anchors, sched.n_full, reward).ret;
        const double want =
            oracle::path_return(pred, anchors.action_lo, anchors.action_hi, ep.demo, n, sched.n_full, reward);
        worst = std::max(worst, std::abs(got - want));
    }
    EXPECT_LE(worst, 1e-9);
}

TEST(RewardConfigValidation, Rejections) {
    RewardConfig cfg;
    cfg.kappa = 0.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.w_seq = -0.1;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.epsilon = 0.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(RewardBreakdown, JsonLineHasAllFields) {
    RewardBreakdown r;
    r.ret = 0.5;
    const auto line = to_json_line(r);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    for (const char* key : {"L_seq_tau", "u_seq", "D_delta", "\"Q\"", "\"C\"", "\"R\"", "n_updates"})
        EXPECT_NE(line.find(key), std::string::npos) << key;
}
