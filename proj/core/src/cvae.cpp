#include "evnav/cvae.hpp"

#include <cmath>

namespace evnav {

Vec encode_request(int node, int node_count, double soc, double time_frac) {
    Vec r = Vec::Zero(node_count + 2);
    r[node] = 1.0;
    r[node_count] = soc;
    r[node_count + 1] = time_frac;
    return r;
}

CvaePlatform::CvaePlatform(const CvaeDims& dims, SeededRng& rng)
    : dims_(dims),
      lstm_("lstm", dims.node_count + 2, dims.cond_dim, dims.lstm_layers, rng),
      encoder_("cvae_enc", {dims.k + dims.cond_dim, dims.hidden, 2 * dims.latent_dim}, rng),
      decoder_("cvae_dec", {dims.latent_dim + dims.cond_dim, dims.hidden, dims.k}, rng),
      run_state_(lstm_.zero_state()) {}

void CvaePlatform::reset_runtime() {
    run_state_ = lstm_.zero_state();
    window_.clear();
}

Vec CvaePlatform::push_request(const Vec& request) {
    window_.push_back(request);
    while (static_cast<int>(window_.size()) > dims_.window) window_.pop_front();
    return lstm_.step(request, run_state_);
}

Vec CvaePlatform::current_condition() const {
    return run_state_.h.back();
}

Vec CvaePlatform::generate_ri(const Vec* eps) const {
    Vec z = eps ? *eps : Vec(Vec::Zero(dims_.latent_dim));
    Vec in(dims_.latent_dim + dims_.cond_dim);
    in << z, run_state_.h.back();
    MlpCache cache;
    return softmax_vec(decoder_.forward(in, cache));
}

Vec CvaePlatform::encode_condition(const std::vector<Vec>& window, Lstm::Cache& cache) const {
    return lstm_.forward(window, cache);
}

std::pair<Vec, Vec> CvaePlatform::split_clamp(const Vec& enc_out, Vec& mask) const {
    Vec mu = enc_out.head(dims_.latent_dim);
    Vec logvar = enc_out.tail(dims_.latent_dim);
    mask = Vec::Ones(dims_.latent_dim);
    for (int i = 0; i < dims_.latent_dim; ++i) {
        if (logvar[i] > kLogvarClamp) {
            logvar[i] = kLogvarClamp;
            mask[i] = 0.0;
        } else if (logvar[i] < -kLogvarClamp) {
            logvar[i] = -kLogvarClamp;
            mask[i] = 0.0;
        }
    }
    return {mu, logvar};
}

Vec CvaePlatform::forward_train(const std::vector<Vec>& window, const Vec& x, const Vec& eps,
                                Cache& cache) const {
    if (std::abs(x.sum() - 1.0) > 1e-6)
        throw NetError("cvae: x must be a probability vector");
    cache.c = lstm_.forward(window, cache.lstm);

    Vec enc_in(dims_.k + dims_.cond_dim);
    enc_in << x, cache.c;
    Vec enc_out = const_cast<Mlp&>(encoder_).forward(enc_in, cache.enc);
    auto [mu, logvar] = split_clamp(enc_out, cache.logvar_mask);
    cache.mu = mu;
    cache.logvar = logvar;
    cache.eps = eps;
    cache.z = gaussian_reparam(mu, logvar, eps);

    Vec dec_in(dims_.latent_dim + dims_.cond_dim);
    dec_in << cache.z, cache.c;
    Vec logits = const_cast<Mlp&>(decoder_).forward(dec_in, cache.dec);
    cache.recon = softmax_vec(logits);
    return cache.recon;
}

double CvaePlatform::kl_term(const Cache& cache) const {
    return kl_diag_gaussian(cache.mu, cache.logvar);
}

double CvaePlatform::recon_mse(const Cache& cache, const Vec& x) const {
    // squared error summed over K (unit-variance Gaussian likelihood, constants dropped)
    return (cache.recon - x).squaredNorm();
}

void CvaePlatform::backward_cvae(const Cache& cache, const Vec& x, double kl_scale,
                                 double mse_scale) {
    // reconstruction branch
    Vec d_recon = mse_scale * 2.0 * (cache.recon - x);
    Vec d_logits = softmax_backward(cache.recon, d_recon);
    Vec d_dec_in = decoder_.backward(d_logits, cache.dec);
    Vec dz = d_dec_in.head(dims_.latent_dim);
    Vec dc = d_dec_in.tail(dims_.cond_dim);

    Vec dmu = Vec::Zero(dims_.latent_dim);
    Vec dlogvar = Vec::Zero(dims_.latent_dim);
    gaussian_reparam_backward(dz, cache.logvar, cache.eps, dmu, dlogvar);
    kl_diag_gaussian_backward(cache.mu, cache.logvar, kl_scale, dmu, dlogvar);
    dlogvar = dlogvar.cwiseProduct(cache.logvar_mask);  // clamp stops gradient

    Vec d_enc_out(2 * dims_.latent_dim);
    d_enc_out << dmu, dlogvar;
    Vec d_enc_in = encoder_.backward(d_enc_out, cache.enc);
    dc += d_enc_in.tail(dims_.cond_dim);  // d/dx of the input FCC tensor is discarded

    lstm_.backward(dc, cache.lstm);
}

void CvaePlatform::backward_shared(const Cache& cache, const Vec& d_ri) {
    Vec d_logits = softmax_backward(cache.recon, d_ri);
    Vec d_dec_in = decoder_.backward(d_logits, cache.dec);
    // z branch stopped: the encoder never sees the DQN objective
    Vec dc = d_dec_in.tail(dims_.cond_dim);
    lstm_.backward(dc, cache.lstm);
}

ParamVector CvaePlatform::shared_params() {
    ParamVector p;
    p.extend(decoder_.params());
    p.extend(lstm_.params());
    return p;
}

ParamVector CvaePlatform::all_params() {
    ParamVector p;
    p.extend(encoder_.params());
    p.extend(decoder_.params());
    p.extend(lstm_.params());
    return p;
}

}  // namespace evnav
