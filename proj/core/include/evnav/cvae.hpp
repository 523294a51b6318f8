#pragma once

#include <deque>

#include "evnav/net.hpp"

namespace evnav {

// One charging request as the platform sees it: node one-hot, SOC, and the
// clock as a fraction of the horizon.
Vec encode_request(int node, int node_count, double soc, double time_frac);

struct CvaeDims {
    int node_count = 39;
    int k = 4;            // FCC tensor dimension
    int cond_dim = 32;    // LSTM hidden = condition label width
    int latent_dim = 8;
    int hidden = 64;      // encoder/decoder hidden width
    int lstm_layers = 2;
    int window = 8;       // truncated request history length W
};

// CVAE over FCC tensors conditioned on the LSTM-encoded request history.
// Training recomputes the condition from stored request windows; execution
// advances a running LSTM and decodes from the prior mean.
class CvaePlatform {
public:
    CvaePlatform(const CvaeDims& dims, SeededRng& rng);

    const CvaeDims& dims() const { return dims_; }

    // --- execution path (no global state) ---
    void reset_runtime();
    // Advance the running LSTM with a new request; returns the condition label.
    Vec push_request(const Vec& request);
    const std::deque<Vec>& window() const { return window_; }
    // Decode RI from the current condition; z = 0 (prior mean) unless eps given.
    Vec generate_ri(const Vec* eps = nullptr) const;
    Vec current_condition() const;

    // --- training path ---
    struct Cache {
        Lstm::Cache lstm;
        MlpCache enc, dec;
        Vec c, mu, logvar, logvar_mask, eps, z, recon;
    };

    Vec encode_condition(const std::vector<Vec>& window, Lstm::Cache& cache) const;
    // Full forward: condition, encoder (mu, logvar), reparameterized z,
    // decoder softmax reconstruction. `x` must be a probability vector.
    Vec forward_train(const std::vector<Vec>& window, const Vec& x, const Vec& eps,
                      Cache& cache) const;

    // ELBO pieces for the cached forward (KL to N(0,I) + MSE reconstruction).
    double kl_term(const Cache& cache) const;
    double recon_mse(const Cache& cache, const Vec& x) const;

    // Backward of (kl_scale * KL + mse_scale * MSE) through encoder, decoder
    // and LSTM. Gradients accumulate in place.
    void backward_cvae(const Cache& cache, const Vec& x, double kl_scale, double mse_scale);

    // Backward of the DQN loss through the shared path: d(RI) -> decoder ->
    // condition -> LSTM. The z branch is stopped so the encoder stays
    // untouched by the DQN objective.
    void backward_shared(const Cache& cache, const Vec& d_ri);

    Mlp& encoder() { return encoder_; }
    Mlp& decoder() { return decoder_; }
    Lstm& lstm() { return lstm_; }

    ParamVector encoder_params() { return encoder_.params(); }
    // decoder + LSTM: the parameters both losses reach
    ParamVector shared_params();
    ParamVector all_params();

private:
    std::pair<Vec, Vec> split_clamp(const Vec& enc_out, Vec& mask) const;

    CvaeDims dims_;
    Lstm lstm_;
    Mlp encoder_;
    Mlp decoder_;
    LstmState run_state_;
    std::deque<Vec> window_;
};

}  // namespace evnav
