#pragma once

#include "evnav/cvae.hpp"
#include "evnav/dqn.hpp"

namespace evnav {

// Min-norm convex combination weight for two gradients over the shared
// parameters: argmin_a || a*g_d + (1-a)*g_c ||^2, clipped to [0, 1].
// Degenerate pairs (g_d ~= g_c) fall back to 0.5.
double mgda_alpha(const Vec& g_d, const Vec& g_c);

struct JointMetrics {
    double dqn_loss = 0.0;
    double cvae_kl = 0.0;
    double cvae_recon = 0.0;
    double alpha = 0.0;
    double grad_norm_d = 0.0;
    double grad_norm_c = 0.0;
};

struct JointHyper {
    double lr_dqn = 5e-4;
    double lr_cvae = 1e-5;
    double gamma = 0.99;
    bool use_mgda = true;  // false = naive loss sum (ablation)
};

// Owns the optimization of the full pipeline. Parameters are partitioned
// disjointly: theta_d = Q-network, theta_c = CVAE encoder, theta_sh = CVAE
// decoder + LSTM (reached by both losses). The DQN loss reaches theta_sh
// because its RI input is the decoder reconstruction of the stored FCC
// tensor under the recomputed condition label.
class JointTrainer {
public:
    JointTrainer(Mlp& qnet, Mlp& qtarget, CvaePlatform& platform, const JointHyper& hyper);

    JointMetrics step(const std::vector<const Transition*>& batch, SeededRng& rng);

    const ParamVector& theta_d() const { return theta_d_; }
    const ParamVector& theta_c() const { return theta_c_; }
    const ParamVector& theta_sh() const { return theta_sh_; }

private:
    Mlp& qnet_;
    Mlp& qtarget_;
    CvaePlatform& platform_;
    JointHyper hyper_;
    ParamVector theta_d_, theta_c_, theta_sh_;
    Adam adam_d_, adam_c_, adam_sh_;
};

}  // namespace evnav
