#include <doctest.h>

#include <cmath>
#include <limits>

#include "evnav/mgda.hpp"

using namespace evnav;

namespace {

Vec random_vec(int n, SeededRng& rng) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.normal(0, 1);
    return v;
}

double grid_min_norm(const Vec& gd, const Vec& gc, int steps = 10000) {
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s <= steps; ++s) {
        double t = static_cast<double>(s) / steps;
        best = std::min(best, (t * gd + (1 - t) * gc).norm());
    }
    return best;
}

}  // namespace

TEST_CASE("orthogonal unit gradients balance at alpha = 0.5") {
    Vec gd(2), gc(2);
    gd << 1.0, 0.0;
    gc << 0.0, 1.0;
    double a = mgda_alpha(gd, gc);
    CHECK(a == doctest::Approx(0.5));
    Vec combined = a * gd + (1 - a) * gc;
    CHECK(combined[0] == doctest::Approx(0.5));
    CHECK(combined[1] == doctest::Approx(0.5));
}

TEST_CASE("equal gradients fall back to alpha = 0.5") {
    Vec g(3);
    g << 1.0, -2.0, 0.5;
    CHECK(mgda_alpha(g, g) == doctest::Approx(0.5));
}

TEST_CASE("same direction, shorter endpoint wins") {
    Vec gd(2), gc(2);
    gd << 10.0, 0.0;
    gc << 1.0, 0.0;
    double a = mgda_alpha(gd, gc);
    CHECK(a == doctest::Approx(0.0));  // combined = gc, the shorter endpoint
    Vec combined = a * gd + (1 - a) * gc;
    CHECK((combined - gc).norm() < 1e-12);
}

TEST_CASE("alpha matches the grid-search oracle and stays clipped") {
    SeededRng rng(10);
    for (int i = 0; i < 200; ++i) {
        int dim = 2 + rng.uniform_int(100);
        Vec gd = random_vec(dim, rng), gc = random_vec(dim, rng);
        double a = mgda_alpha(gd, gc);
        REQUIRE(a >= 0.0);
        REQUIRE(a <= 1.0);
        double got = (a * gd + (1 - a) * gc).norm();
        REQUIRE(got <= grid_min_norm(gd, gc) + 1e-6);
        // feasible endpoints bound the optimum
        REQUIRE(got <= std::min(gd.norm(), gc.norm()) + 1e-12);
    }
}

TEST_CASE("interior solutions satisfy the min-norm first-order condition") {
    SeededRng rng(11);
    int interior = 0;
    for (int i = 0; i < 200; ++i) {
        int dim = 2 + rng.uniform_int(50);
        Vec gd = random_vec(dim, rng), gc = random_vec(dim, rng);
        double a = mgda_alpha(gd, gc);
        if (a <= 1e-9 || a >= 1.0 - 1e-9) continue;
        ++interior;
        Vec v = a * gd + (1 - a) * gc;
        double n2 = v.squaredNorm();
        REQUIRE(std::abs(gd.dot(v) - n2) / std::max(1.0, n2) < 1e-8);
        REQUIRE(std::abs(gc.dot(v) - n2) / std::max(1.0, n2) < 1e-8);
        // descent for both objectives along the combined direction
        REQUIRE(gd.dot(v) >= 0.0);
        REQUIRE(gc.dot(v) >= 0.0);
    }
    CHECK(interior > 0);
}

namespace {

struct JointFixture {
    SeededRng rng{77};
    CvaeDims dims;
    CvaePlatform platform;
    int obs_dim;
    Mlp qnet, qtarget;

    JointFixture()
        : dims(make_dims()),
          platform(dims, rng),
          obs_dim(dims.node_count + 1 + dims.k),
          qnet("q", {obs_dim, 16, dims.k}, rng),
          qtarget("qt", {obs_dim, 16, dims.k}, rng) {
        qtarget.copy_from(qnet);
    }

    static CvaeDims make_dims() {
        CvaeDims d;
        d.node_count = 6;
        d.k = 4;
        d.cond_dim = 5;
        d.latent_dim = 3;
        d.hidden = 8;
        d.window = 3;
        return d;
    }

    Transition make_transition() {
        Transition t;
        t.obs = Vec::Zero(obs_dim);
        t.obs[rng.uniform_int(dims.node_count)] = 1.0;
        t.obs[dims.node_count] = rng.uniform(0.4, 0.6);
        t.obs.tail(dims.k) = softmax_vec(Vec::Random(dims.k));
        t.next_obs = t.obs;
        t.action = rng.uniform_int(dims.k);
        t.reward = -rng.uniform(0, 10);
        t.terminal = rng.uniform_int(4) == 0;
        t.fcc_true = softmax_vec(Vec::Random(dims.k));
        for (int i = 0; i < dims.window; ++i)
            t.request_window.push_back(encode_request(rng.uniform_int(dims.node_count),
                                                      dims.node_count,
                                                      rng.uniform(0.4, 0.6),
                                                      rng.uniform(0, 1)));
        return t;
    }
};

}  // namespace

TEST_CASE("joint trainer partitions the parameters totally and disjointly") {
    JointFixture f;
    JointHyper h;
    JointTrainer trainer(f.qnet, f.qtarget, f.platform, h);
    CHECK_FALSE(trainer.theta_d().overlaps(trainer.theta_c()));
    CHECK_FALSE(trainer.theta_d().overlaps(trainer.theta_sh()));
    CHECK_FALSE(trainer.theta_c().overlaps(trainer.theta_sh()));
    Eigen::Index total = trainer.theta_d().size() + trainer.theta_c().size() +
                         trainer.theta_sh().size();
    CHECK(total == f.qnet.params().size() + f.platform.all_params().size());
    CHECK(trainer.theta_d().size() == f.qnet.params().size());
    CHECK(trainer.theta_c().size() == f.platform.encoder_params().size());
    CHECK(trainer.theta_sh().size() == f.platform.shared_params().size());
}

TEST_CASE("joint step produces finite metrics with alpha in range") {
    JointFixture f;
    JointHyper h;
    JointTrainer trainer(f.qnet, f.qtarget, f.platform, h);
    std::vector<Transition> ts;
    for (int i = 0; i < 8; ++i) ts.push_back(f.make_transition());
    std::vector<const Transition*> batch;
    for (auto& t : ts) batch.push_back(&t);

    SeededRng step_rng(5);
    JointMetrics m = trainer.step(batch, step_rng);
    CHECK(std::isfinite(m.dqn_loss));
    CHECK(m.dqn_loss >= 0.0);
    CHECK(m.cvae_kl >= 0.0);
    CHECK(m.cvae_recon >= 0.0);
    CHECK(m.alpha >= 0.0);
    CHECK(m.alpha <= 1.0);
    CHECK(m.grad_norm_d > 0.0);
    CHECK(m.grad_norm_c > 0.0);
}

TEST_CASE("naive-sum mode reports alpha = 1 and still updates") {
    JointFixture f;
    JointHyper h;
    h.use_mgda = false;
    JointTrainer trainer(f.qnet, f.qtarget, f.platform, h);
    std::vector<Transition> ts;
    for (int i = 0; i < 4; ++i) ts.push_back(f.make_transition());
    std::vector<const Transition*> batch;
    for (auto& t : ts) batch.push_back(&t);
    Vec before = f.platform.shared_params().flatten_values();
    SeededRng step_rng(6);
    JointMetrics m = trainer.step(batch, step_rng);
    CHECK(m.alpha == 1.0);
    CHECK((f.platform.shared_params().flatten_values() - before).norm() > 0.0);
}

TEST_CASE("dqn loss reaches the shared decoder but never the encoder") {
    JointFixture f;
    JointHyper h;
    JointTrainer trainer(f.qnet, f.qtarget, f.platform, h);
    std::vector<Transition> ts;
    for (int i = 0; i < 4; ++i) ts.push_back(f.make_transition());
    std::vector<const Transition*> batch;
    for (auto& t : ts) batch.push_back(&t);

    // the step must change every partition (all three optimizers engage)
    Vec d0 = trainer.theta_d().flatten_values();
    Vec c0 = trainer.theta_c().flatten_values();
    Vec sh0 = trainer.theta_sh().flatten_values();
    SeededRng step_rng(7);
    trainer.step(batch, step_rng);
    CHECK((trainer.theta_d().flatten_values() - d0).norm() > 0.0);
    CHECK((trainer.theta_c().flatten_values() - c0).norm() > 0.0);
    CHECK((trainer.theta_sh().flatten_values() - sh0).norm() > 0.0);
}
