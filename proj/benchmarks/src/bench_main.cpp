#include <benchmark/benchmark.h>

#include <random>

#include "sants/diagnostics.hpp"
#include "sants/episode_io.hpp"
#include "sants/grid.hpp"
#include "sants/scheduler.hpp"
#include "sants/trainer.hpp"

using namespace sants;

namespace {

const SyntheticPolicy& policy() {
    static const SyntheticPolicy p(TestbedConfig{}, 20240601);
    return p;
}

SchedulerNet default_net() {
    const TrainerConfig cfg;
    return SchedulerNet::initialized(cfg.net_shape(SchedulerConfig{}.d_feat), 1, NetInit{0.5, -1.0, 1.0, 1.0});
}

Eigen::VectorXd feature() {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::VectorXd f(SchedulerConfig{}.d_feat);
    for (int i = 0; i < f.size(); ++i) f[i] = n(rng);
    return f;
}

void BM_NetForward(benchmark::State& state) {
    const auto net = default_net();
    const auto f = feature();
    for (auto _ : state) benchmark::DoNotOptimize(net.forward(f, 0.5));
}
BENCHMARK(BM_NetForward);

void BM_NetForwardBackward(benchmark::State& state) {
    const auto net = default_net();
    const auto f = feature();
    std::vector<double> grad(net.parameter_count(), 0.0);
    ForwardCache cache;
    for (auto _ : state) {
        net.forward(f, 0.5, &cache);
        net.backward(cache, {1.0, 0.5, 0.25}, grad);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(BM_NetForwardBackward);

void BM_Deploy(benchmark::State& state) {
    const auto net = default_net();
    const SchedulerConfig sched;
    const auto ep = policy().sample_episode(3);
    const auto noise = policy().initial_noise(ep);
    const ScheduleContext ctx{policy(), ep, sched, ScheduleMode::Full};
    for (auto _ : state) benchmark::DoNotOptimize(run_deploy(ctx, net, noise));
}
BENCHMARK(BM_Deploy);

void BM_FixedFullGrid(benchmark::State& state) {
    const SchedulerConfig sched;
    const auto grid = build_full_grid(sched);
    const auto ep = policy().sample_episode(4);
    const auto noise = policy().initial_noise(ep);
    for (auto _ : state) benchmark::DoNotOptimize(run_fixed_levels(policy(), ep, grid, noise));
}
BENCHMARK(BM_FixedFullGrid);

void BM_DepthScan(benchmark::State& state) {
    const SchedulerConfig sched;
    const RewardConfig reward;
    const auto eps = sample_split(policy(), 20240601, "scan", static_cast<int>(state.range(0)));
    const auto depths = default_depth_fractions();
    for (auto _ : state) benchmark::DoNotOptimize(depth_scan(policy(), eps, depths, sched, reward));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DepthScan)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_PpoUpdate(benchmark::State& state) {
    auto net = default_net();
    const SchedulerConfig sched;
    const RewardConfig reward;
    TrainerConfig cfg;
    Rng rng(5);
    const auto sample = sample_path(policy(), net, policy().sample_episode(5), sched, reward, cfg, rng);
    EmaBaseline baseline;
    AdamState adam;
    for (auto _ : state) benchmark::DoNotOptimize(ppo_update(net, std::span(&sample, 1), baseline, adam, cfg));
}
BENCHMARK(BM_PpoUpdate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
