#include "evnav/mgda.hpp"

#include <algorithm>
#include <cmath>

namespace evnav {

double mgda_alpha(const Vec& g_d, const Vec& g_c) {
    Vec diff = g_d - g_c;
    double denom = diff.squaredNorm();
    if (denom < 1e-24) return 0.5;
    double a = (g_c - g_d).dot(g_c) / denom;
    return std::clamp(a, 0.0, 1.0);
}

JointTrainer::JointTrainer(Mlp& qnet, Mlp& qtarget, CvaePlatform& platform,
                           const JointHyper& hyper)
    : qnet_(qnet),
      qtarget_(qtarget),
      platform_(platform),
      hyper_(hyper),
      theta_d_(qnet.params()),
      theta_c_(platform.encoder_params()),
      theta_sh_(platform.shared_params()),
      adam_d_(hyper.lr_dqn),
      adam_c_(hyper.lr_cvae),
      adam_sh_(hyper.lr_dqn) {
    if (theta_d_.overlaps(theta_c_) || theta_d_.overlaps(theta_sh_) ||
        theta_c_.overlaps(theta_sh_))
        throw NetError("parameter partition overlaps");
}

JointMetrics JointTrainer::step(const std::vector<const Transition*>& batch, SeededRng& rng) {
    if (batch.empty()) throw NetError("joint_step: empty batch");
    const std::size_t n = batch.size();
    const int k = platform_.dims().k;
    const int latent = platform_.dims().latent_dim;

    theta_d_.zero_grads();
    theta_c_.zero_grads();
    theta_sh_.zero_grads();

    // shared forward: condition labels, latents, reconstructions
    std::vector<CvaePlatform::Cache> caches(n);
    std::vector<Vec> train_obs(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vec eps(latent);
        for (int d = 0; d < latent; ++d) eps[d] = rng.normal(0.0, 1.0);
        Vec recon = platform_.forward_train(batch[i]->request_window, batch[i]->fcc_true,
                                            eps, caches[i]);
        train_obs[i] = batch[i]->obs;
        train_obs[i].tail(k) = recon;  // DQN consumes the reconstruction
    }

    // DQN loss -> theta_d + theta_sh (via the RI slice)
    TdResult td = td_loss(batch, train_obs, qnet_, qtarget_, hyper_.gamma);
    for (std::size_t i = 0; i < n; ++i)
        platform_.backward_shared(caches[i], td.d_obs[i].tail(k));
    Vec g_d = theta_sh_.flatten_grads();
    theta_sh_.zero_grads();

    // CVAE loss -> theta_c + theta_sh
    JointMetrics m;
    m.dqn_loss = td.loss;
    double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        m.cvae_kl += platform_.kl_term(caches[i]) * inv_n;
        m.cvae_recon += platform_.recon_mse(caches[i], batch[i]->fcc_true) * inv_n;
        platform_.backward_cvae(caches[i], batch[i]->fcc_true, inv_n, inv_n);
    }
    Vec g_c = theta_sh_.flatten_grads();

    m.grad_norm_d = g_d.norm();
    m.grad_norm_c = g_c.norm();
    if (hyper_.use_mgda) {
        m.alpha = mgda_alpha(g_d, g_c);
        theta_sh_.set_grads(m.alpha * g_d + (1.0 - m.alpha) * g_c);
    } else {
        m.alpha = 1.0;  // naive sum: both gradients at full weight
        theta_sh_.set_grads(g_d + g_c);
    }

    adam_d_.step(theta_d_);
    adam_c_.step(theta_c_);
    adam_sh_.step(theta_sh_);
    return m;
}

}  // namespace evnav
