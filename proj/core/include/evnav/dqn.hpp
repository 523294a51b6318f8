#pragma once

#include <deque>
#include <vector>

#include "evnav/net.hpp"

namespace evnav {

struct Transition {
    Vec obs;
    int action = 0;
    double reward = 0.0;
    Vec next_obs;
    bool terminal = false;
    // supervision targets for the recommendation platform
    Vec fcc_true;                   // softmaxed FCC tensor at the decision
    std::vector<Vec> request_window;  // last W charging requests ending here
};

// Uniform-replay ring. A sampled batch never repeats an index.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(Transition t);
    std::size_t size() const { return ring_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return ring_[i]; }

    std::vector<const Transition*> sample(std::size_t batch, SeededRng& rng) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> ring_;
};

// epsilon-greedy over Q-values; greedy ties break toward the lowest index.
int select_action(const Vec& qs, double epsilon, SeededRng& rng);

int argmax_lowest(const Vec& qs);

// Linear 1.0 -> 0.05 over the first half of training, then constant.
double epsilon_schedule(int episode, int total_episodes);

struct TdResult {
    double loss = 0.0;
    // dL/d(input encoding) per batch item, for the shared MGDA path
    std::vector<Vec> d_obs;
};

// Mean squared TD error over the batch; terminal transitions use q_t = r.
// Gradients accumulate into `qnet` only; `target` stays frozen. `obs[i]` is
// the training-time input for batch item i (the stored encoding for plain
// methods, a fresh reconstruction for the joint pipeline).
TdResult td_loss(const std::vector<const Transition*>& batch, const std::vector<Vec>& obs,
                 Mlp& qnet, const Mlp& target, double gamma);

}  // namespace evnav
