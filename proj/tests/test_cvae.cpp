#include <doctest.h>

#include <cmath>

#include "evnav/cvae.hpp"

using namespace evnav;

namespace {

CvaeDims small_dims() {
    CvaeDims d;
    d.node_count = 6;
    d.k = 4;
    d.cond_dim = 5;
    d.latent_dim = 3;
    d.hidden = 8;
    d.lstm_layers = 2;
    d.window = 4;
    return d;
}

Vec random_request(const CvaeDims& d, SeededRng& rng) {
    return encode_request(rng.uniform_int(d.node_count), d.node_count,
                          rng.uniform(0.4, 0.6), rng.uniform(0, 1));
}

}  // namespace

TEST_CASE("encode_request packs one-hot node, soc, and time fraction") {
    Vec r = encode_request(3, 6, 0.5, 0.25);
    REQUIRE(r.size() == 8);
    CHECK(r[3] == 1.0);
    CHECK(r.head(6).sum() == 1.0);
    CHECK(r[6] == 0.5);
    CHECK(r[7] == 0.25);
}

TEST_CASE("condition encoding is deterministic and order sensitive") {
    SeededRng rng(1);
    CvaeDims d = small_dims();
    CvaePlatform pf(d, rng);

    std::vector<Vec> window;
    for (int i = 0; i < 4; ++i) window.push_back(random_request(d, rng));

    Lstm::Cache c1, c2;
    Vec a = pf.encode_condition(window, c1);
    Vec b = pf.encode_condition(window, c2);
    CHECK((a - b).norm() == 0.0);

    std::vector<Vec> permuted{window[1], window[0], window[2], window[3]};
    Lstm::Cache c3;
    Vec p = pf.encode_condition(permuted, c3);
    CHECK((a - p).norm() > 1e-9);
}

TEST_CASE("runtime LSTM state equals training-side encoding for short histories") {
    SeededRng rng(2);
    CvaeDims d = small_dims();
    CvaePlatform pf(d, rng);

    pf.reset_runtime();
    std::vector<Vec> history;
    for (int i = 0; i < d.window; ++i) {
        Vec r = random_request(d, rng);
        history.push_back(r);
        pf.push_request(r);
    }
    Lstm::Cache cache;
    Vec offline = pf.encode_condition(history, cache);
    CHECK((pf.current_condition() - offline).norm() < 1e-12);
    CHECK(static_cast<int>(pf.window().size()) == d.window);

    // one more push: the stored window keeps only the last W requests
    pf.push_request(random_request(d, rng));
    CHECK(static_cast<int>(pf.window().size()) == d.window);
}

TEST_CASE("generate_ri returns a deterministic probability vector") {
    SeededRng rng(3);
    CvaeDims d = small_dims();
    CvaePlatform pf(d, rng);
    pf.reset_runtime();
    pf.push_request(random_request(d, rng));
    Vec a = pf.generate_ri();
    Vec b = pf.generate_ri();
    REQUIRE(a.size() == d.k);
    CHECK(std::abs(a.sum() - 1.0) < 1e-12);
    for (int i = 0; i < d.k; ++i) CHECK(a[i] > 0.0);
    CHECK((a - b).norm() == 0.0);

    // z = 0 is the prior mean; a different z moves the output
    Vec eps = Vec::Ones(d.latent_dim) * 3.0;
    Vec c = pf.generate_ri(&eps);
    CHECK((a - c).norm() > 0.0);
}

TEST_CASE("forward_train rejects non-probability inputs and reconstructs a simplex point") {
    SeededRng rng(4);
    CvaeDims d = small_dims();
    CvaePlatform pf(d, rng);
    std::vector<Vec> window{random_request(d, rng)};
    Vec eps = Vec::Zero(d.latent_dim);

    CvaePlatform::Cache cache;
    Vec bad = Vec::Constant(d.k, 0.5);
    CHECK_THROWS_AS(pf.forward_train(window, bad, eps, cache), NetError);

    Vec x = softmax_vec(Vec::Random(d.k));
    Vec recon = pf.forward_train(window, x, eps, cache);
    CHECK(std::abs(recon.sum() - 1.0) < 1e-12);
    CHECK(cache.z.size() == d.latent_dim);
    CHECK((cache.z - cache.mu).norm() == 0.0);  // eps = 0 -> z = mu
}

TEST_CASE("elbo terms are nonnegative and logged separately") {
    SeededRng rng(5);
    CvaeDims d = small_dims();
    CvaePlatform pf(d, rng);
    std::vector<Vec> window{random_request(d, rng), random_request(d, rng)};
    Vec x = softmax_vec(Vec::Random(d.k));
    Vec eps(d.latent_dim);
    for (int i = 0; i < eps.size(); ++i) eps[i] = rng.normal(0, 1);
    CvaePlatform::Cache cache;
    pf.forward_train(window, x, eps, cache);
    CHECK(pf.kl_term(cache) >= 0.0);
    CHECK(pf.recon_mse(cache, x) >= 0.0);
    // reconstruction error is the summed squared distance on the simplex
    CHECK(pf.recon_mse(cache, x) == doctest::Approx((cache.recon - x).squaredNorm()));
}

TEST_CASE("full elbo gradient matches finite differences") {
    SeededRng rng(6);
    CvaeDims d = small_dims();
    CvaePlatform pf(d, rng);
    std::vector<Vec> window;
    for (int i = 0; i < 3; ++i) window.push_back(random_request(d, rng));
    Vec x = softmax_vec(Vec::Random(d.k));
    Vec eps(d.latent_dim);
    for (int i = 0; i < eps.size(); ++i) eps[i] = rng.normal(0, 1);

    ParamVector p = pf.all_params();
    p.zero_grads();
    CvaePlatform::Cache cache;
    pf.forward_train(window, x, eps, cache);
    pf.backward_cvae(cache, x, 1.0, 1.0);
    Vec analytic = p.flatten_grads();
    auto loss = [&] {
        CvaePlatform::Cache c;
        pf.forward_train(window, x, eps, c);
        return pf.kl_term(c) + pf.recon_mse(c, x);
    };
    CHECK(gradient_check(p, loss, analytic) < 1e-4);
}

TEST_CASE("backward_shared reaches decoder and LSTM but never the encoder") {
    SeededRng rng(7);
    CvaeDims d = small_dims();
    CvaePlatform pf(d, rng);
    std::vector<Vec> window{random_request(d, rng)};
    Vec x = softmax_vec(Vec::Random(d.k));
    Vec eps = Vec::Zero(d.latent_dim);

    pf.all_params().zero_grads();
    CvaePlatform::Cache cache;
    pf.forward_train(window, x, eps, cache);
    Vec d_ri(d.k);
    for (int i = 0; i < d.k; ++i) d_ri[i] = rng.normal(0, 1);
    pf.backward_shared(cache, d_ri);

    CHECK(pf.encoder_params().flatten_grads().norm() == 0.0);
    CHECK(pf.shared_params().flatten_grads().norm() > 0.0);
    CHECK(pf.decoder().params().flatten_grads().norm() > 0.0);
    CHECK(pf.lstm().params().flatten_grads().norm() > 0.0);
}

TEST_CASE("execution path depends only on pushed requests") {
    SeededRng rng(8);
    CvaeDims d = small_dims();
    CvaePlatform pf(d, rng);

    std::vector<Vec> requests;
    for (int i = 0; i < 3; ++i) requests.push_back(random_request(d, rng));

    pf.reset_runtime();
    for (const Vec& r : requests) pf.push_request(r);
    Vec first = pf.generate_ri();

    pf.reset_runtime();
    for (const Vec& r : requests) pf.push_request(r);
    Vec second = pf.generate_ri();
    CHECK((first - second).norm() == 0.0);
}

TEST_CASE("logvar clamp keeps the latent head bounded") {
    SeededRng rng(9);
    CvaeDims d = small_dims();
    CvaePlatform pf(d, rng);
    // blow the encoder bias up so the raw logvar head exceeds the clamp
    auto& out_layer = pf.encoder().layers.back();
    out_layer.b.value.setConstant(1000.0);
    std::vector<Vec> window{random_request(d, rng)};
    Vec x = softmax_vec(Vec::Random(d.k));
    CvaePlatform::Cache cache;
    pf.forward_train(window, x, Vec::Zero(d.latent_dim), cache);
    for (int i = 0; i < d.latent_dim; ++i) {
        CHECK(cache.logvar[i] <= kLogvarClamp);
        CHECK(cache.logvar[i] >= -kLogvarClamp);
    }
    CHECK(std::isfinite(pf.kl_term(cache)));
}
