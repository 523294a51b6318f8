#include <benchmark/benchmark.h>

#include "evnav/fcc.hpp"
#include "evnav/harness.hpp"

using namespace evnav;

static const TrafficGraph& graph39() {
    static TrafficGraph g = TrafficGraph::load(resolve_config_path("graph39.json"));
    return g;
}

static void BM_Dijkstra(benchmark::State& state) {
    const TrafficGraph& g = graph39();
    SeededRng rng(1);
    VelocityField f = sample_velocities(g, rng);
    int s = 0;
    for (auto _ : state) {
        Route r = shortest_path(g, f, s, g.evcs_nodes()[s % 4]);
        benchmark::DoNotOptimize(r.expected_time_min);
        s = (s + 1) % g.node_count();
    }
}
BENCHMARK(BM_Dijkstra);

static void BM_ExpectedQueue(benchmark::State& state) {
    SeededRng rng(2);
    std::vector<PlannedArrival> plans;
    for (int p = 0; p < 8; ++p)
        plans.push_back({p, 0, rng.uniform(0.0, 60.0), rng.uniform(10.0, 50.0)});
    PlannedArrival me{99, 0, 45.0, 30.0};
    for (auto _ : state) benchmark::DoNotOptimize(expected_queue(plans, me, 2));
}
BENCHMARK(BM_ExpectedQueue);

static void BM_LstmWindow(benchmark::State& state) {
    SeededRng rng(3);
    Lstm lstm("l", 41, 32, 2, rng);
    std::vector<Vec> window(8);
    for (auto& v : window) {
        v = Vec(41);
        for (int i = 0; i < v.size(); ++i) v[i] = rng.normal(0, 1);
    }
    for (auto _ : state) {
        Lstm::Cache c;
        Vec h = lstm.forward(window, c);
        lstm.backward(h, c);
        benchmark::DoNotOptimize(h);
    }
}
BENCHMARK(BM_LstmWindow);

static void BM_JointTrainStep(benchmark::State& state) {
    SeededRng rng(4);
    CvaeDims dims;
    dims.node_count = 39;
    CvaePlatform pf(dims, rng);
    int obs_dim = 39 + 1 + dims.k;
    Mlp qnet("q", {obs_dim, 128, 128, dims.k}, rng);
    Mlp qtarget("qt", {obs_dim, 128, 128, dims.k}, rng);
    qtarget.copy_from(qnet);
    JointHyper jh;
    JointTrainer trainer(qnet, qtarget, pf, jh);

    std::vector<Transition> pool(64);
    for (auto& t : pool) {
        t.obs = Vec::Random(obs_dim).cwiseAbs();
        t.next_obs = Vec::Random(obs_dim).cwiseAbs();
        t.reward = -rng.uniform(0.0, 50.0);
        t.action = rng.uniform_int(dims.k);
        t.fcc_true = softmax_vec(Vec::Random(dims.k));
        t.request_window.resize(8);
        for (auto& r : t.request_window) r = Vec::Random(41).cwiseAbs();
    }
    SeededRng step_rng(5);
    for (auto _ : state) {
        std::vector<const Transition*> batch;
        for (int i = 0; i < 16; ++i) batch.push_back(&pool[step_rng.uniform_int(64)]);
        JointMetrics m = trainer.step(batch, step_rng);
        benchmark::DoNotOptimize(m.dqn_loss);
    }
}
BENCHMARK(BM_JointTrainStep);

BENCHMARK_MAIN();
