#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "evnav/net.hpp"

using namespace evnav;

namespace {

Vec random_vec(int n, SeededRng& rng) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.normal(0, 1);
    return v;
}

}  // namespace

TEST_CASE("dense layer with identity weights is the identity") {
    SeededRng rng(1);
    DenseLayer l("d", 3, 3, Activation::Linear, rng);
    l.W.value = Mat::Identity(3, 3);
    l.b.value.setZero();
    Vec x(3);
    x << 1.0, -2.0, 0.5;
    DenseCache c;
    CHECK((l.forward(x, c) - x).norm() == 0.0);
}

TEST_CASE("dense layer rejects NaN input and shape mismatches") {
    SeededRng rng(2);
    DenseLayer l("d", 3, 2, Activation::Relu, rng);
    DenseCache c;
    Vec bad(3);
    bad << 1.0, std::nan(""), 0.0;
    CHECK_THROWS_AS(l.forward(bad, c), NetError);
    CHECK_THROWS_AS(l.forward(Vec::Zero(4), c), NetError);
}

TEST_CASE("mlp gradients match finite differences") {
    SeededRng rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        int in = 2 + rng.uniform_int(5), hid = 2 + rng.uniform_int(6),
            out = 1 + rng.uniform_int(4);
        Mlp mlp("m", {in, hid, out}, rng);
        Vec x = random_vec(in, rng), t = random_vec(out, rng);
        ParamVector p = mlp.params();
        p.zero_grads();
        MlpCache c;
        Vec y = mlp.forward(x, c);
        mlp.backward(y - t, c);
        auto loss = [&] {
            MlpCache cc;
            return 0.5 * (mlp.forward(x, cc) - t).squaredNorm();
        };
        REQUIRE(gradient_check(p, loss, p.flatten_grads()) < 1e-4);
    }
}

TEST_CASE("lstm with zero weights stays at zero") {
    SeededRng rng(4);
    Lstm lstm("l", 3, 4, 2, rng);
    for (auto& cell : lstm.cells) {
        cell.Wx.value.setZero();
        cell.Wh.value.setZero();
        cell.b.value.setZero();
    }
    LstmState s = lstm.zero_state();
    Vec h = lstm.step(random_vec(3, rng), s);
    CHECK(h.norm() == 0.0);  // i*g = 0.5*tanh(0) = 0
}

TEST_CASE("lstm forward is deterministic and step matches windowed forward") {
    SeededRng rng(5);
    Lstm lstm("l", 3, 5, 2, rng);
    std::vector<Vec> window;
    for (int t = 0; t < 6; ++t) window.push_back(random_vec(3, rng));

    Lstm::Cache c1, c2;
    Vec a = lstm.forward(window, c1);
    Vec b = lstm.forward(window, c2);
    CHECK((a - b).norm() == 0.0);

    LstmState s = lstm.zero_state();
    Vec stepped;
    for (const Vec& x : window) stepped = lstm.step(x, s);
    CHECK((a - stepped).norm() < 1e-14);
}

TEST_CASE("lstm BPTT gradients match finite differences") {
    SeededRng rng(6);
    for (int trial = 0; trial < 3; ++trial) {
        Lstm lstm("l", 3, 4, 2, rng);
        std::vector<Vec> window;
        for (int t = 0; t < 4 + trial; ++t) window.push_back(random_vec(3, rng));
        Vec target = random_vec(4, rng);
        ParamVector p = lstm.params();
        p.zero_grads();
        Lstm::Cache c;
        Vec h = lstm.forward(window, c);
        lstm.backward(h - target, c);
        auto loss = [&] {
            Lstm::Cache cc;
            return 0.5 * (lstm.forward(window, cc) - target).squaredNorm();
        };
        REQUIRE(gradient_check(p, loss, p.flatten_grads()) < 1e-4);
    }
}

TEST_CASE("reparameterization is exact at eps = 0 and differentiable") {
    SeededRng rng(7);
    Vec mu = random_vec(4, rng), logvar = random_vec(4, rng);
    CHECK((gaussian_reparam(mu, logvar, Vec::Zero(4)) - mu).norm() == 0.0);

    Vec eps = random_vec(4, rng);
    Vec z = gaussian_reparam(mu, logvar, eps);
    for (int i = 0; i < 4; ++i)
        CHECK(z[i] == doctest::Approx(mu[i] + std::exp(logvar[i] / 2.0) * eps[i]));

    // finite-difference check of d(sum z)/dmu and /dlogvar with frozen eps
    Vec dmu = Vec::Zero(4), dlogvar = Vec::Zero(4);
    gaussian_reparam_backward(Vec::Ones(4), logvar, eps, dmu, dlogvar);
    double h = 1e-6;
    for (int i = 0; i < 4; ++i) {
        Vec up = logvar, dn = logvar;
        up[i] += h;
        dn[i] -= h;
        double num = (gaussian_reparam(mu, up, eps).sum() -
                      gaussian_reparam(mu, dn, eps).sum()) / (2 * h);
        CHECK(dlogvar[i] == doctest::Approx(num).epsilon(1e-5));
        CHECK(dmu[i] == doctest::Approx(1.0));
    }
}

TEST_CASE("kl divergence closed form") {
    CHECK(kl_diag_gaussian(Vec::Zero(3), Vec::Zero(3)) == 0.0);
    Vec mu = Vec::Zero(1);
    mu[0] = 1.0;
    CHECK(kl_diag_gaussian(mu, Vec::Zero(1)) == doctest::Approx(0.5));
    SeededRng rng(8);
    for (int i = 0; i < 50; ++i) {
        Vec m = random_vec(5, rng), lv = random_vec(5, rng);
        REQUIRE(kl_diag_gaussian(m, lv) >= 0.0);
    }
}

TEST_CASE("softmax_vec sums to one; softmax_backward matches finite differences") {
    SeededRng rng(9);
    Vec x = random_vec(6, rng);
    Vec y = softmax_vec(x);
    CHECK(std::abs(y.sum() - 1.0) < 1e-12);

    Vec dy = random_vec(6, rng);
    Vec dx = softmax_backward(y, dy);
    double h = 1e-6;
    for (int i = 0; i < 6; ++i) {
        Vec up = x, dn = x;
        up[i] += h;
        dn[i] -= h;
        double num = (softmax_vec(up).dot(dy) - softmax_vec(dn).dot(dy)) / (2 * h);
        CHECK(dx[i] == doctest::Approx(num).epsilon(1e-4));
    }
}

TEST_CASE("adam leaves params alone on zero grads and takes ~lr-sized first steps") {
    SeededRng rng(10);
    Mlp mlp("m", {2, 3}, rng);
    ParamVector p = mlp.params();
    Vec before = p.flatten_values();

    Adam opt(1e-3);
    p.zero_grads();
    opt.step(p);
    CHECK((p.flatten_values() - before).norm() == 0.0);

    // constant gradient: the bias-corrected first step is lr * g / (|g| + eps)
    Adam fresh(1e-3);
    p.set_grads(Vec::Constant(p.size(), 2.0));
    fresh.step(p);
    Vec delta = p.flatten_values() - before;
    for (int i = 0; i < delta.size(); ++i)
        CHECK(delta[i] == doctest::Approx(-1e-3).epsilon(1e-4));
}

TEST_CASE("two adam instances do not cross-talk") {
    SeededRng rng(11);
    Mlp a("a", {2, 2}, rng), b("b", {2, 2}, rng);
    ParamVector pa = a.params(), pb = b.params();
    Vec b_before = pb.flatten_values();
    Adam oa(1e-2), ob(1e-2);
    pa.set_grads(Vec::Constant(pa.size(), 1.0));
    oa.step(pa);
    CHECK((pb.flatten_values() - b_before).norm() == 0.0);
}

TEST_CASE("param vector flatten/unflatten round-trips and detects overlap") {
    SeededRng rng(12);
    Mlp mlp("m", {3, 4, 2}, rng);
    ParamVector p = mlp.params();
    Vec v = p.flatten_values();
    p.set_values(v * 2.0);
    CHECK((p.flatten_values() - v * 2.0).norm() == 0.0);
    p.set_values(v);
    CHECK((p.flatten_values() - v).norm() == 0.0);

    ParamVector q = mlp.params();
    CHECK(p.overlaps(q));
    Mlp other("o", {3, 2}, rng);
    ParamVector r = other.params();
    CHECK_FALSE(p.overlaps(r));
}

TEST_CASE("checkpoints round-trip bit-exact and reject mismatched nets") {
    SeededRng rng(13);
    Mlp mlp("m", {4, 8, 3}, rng);
    ParamVector p = mlp.params();
    Vec original = p.flatten_values();

    std::string path = (std::filesystem::temp_directory_path() / "evnav_test.ckpt").string();
    save_checkpoint(p, path);
    p.set_values(Vec::Zero(p.size()));
    load_checkpoint(p, path);
    CHECK((p.flatten_values() - original).norm() == 0.0);

    Mlp wrong_shape("m", {4, 9, 3}, rng);
    ParamVector ws = wrong_shape.params();
    CHECK_THROWS_AS(load_checkpoint(ws, path), NetError);
    Mlp wrong_name("x", {4, 8, 3}, rng);
    ParamVector wn = wrong_name.params();
    CHECK_THROWS_AS(load_checkpoint(wn, path), NetError);

    // corrupt magic
    FILE* f = std::fopen(path.c_str(), "r+b");
    std::fputc('Z', f);
    std::fclose(f);
    CHECK_THROWS_AS(load_checkpoint(p, path), NetError);
    std::filesystem::remove(path);
}

TEST_CASE("mlp copy_from duplicates parameters exactly") {
    SeededRng rng(14);
    Mlp a("q", {3, 5, 2}, rng), b("q", {3, 5, 2}, rng);
    b.copy_from(a);
    CHECK((a.params().flatten_values() - b.params().flatten_values()).norm() == 0.0);
    Mlp c("q", {3, 4, 2}, rng);
    CHECK_THROWS_AS(c.copy_from(a), NetError);
}
