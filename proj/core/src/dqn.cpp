#include "evnav/dqn.hpp"

#include <algorithm>

namespace evnav {

void ReplayBuffer::push(Transition t) {
    if (ring_.size() < capacity_) {
        ring_.push_back(std::move(t));
    } else {
        ring_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch, SeededRng& rng) const {
    if (batch > ring_.size()) throw NetError("replay: batch larger than buffer");
    // partial Fisher-Yates over an index vector: without replacement
    std::vector<std::size_t> idx(ring_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::vector<const Transition*> out;
    out.reserve(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(static_cast<int>(idx.size() - i)));
        std::swap(idx[i], idx[j]);
        out.push_back(&ring_[idx[i]]);
    }
    return out;
}

int argmax_lowest(const Vec& qs) {
    int best = 0;
    for (int i = 1; i < qs.size(); ++i)
        if (qs[i] > qs[best]) best = i;
    return best;
}

int select_action(const Vec& qs, double epsilon, SeededRng& rng) {
    if (epsilon > 0.0 && rng.uniform(0.0, 1.0) < epsilon)
        return rng.uniform_int(static_cast<int>(qs.size()));
    return argmax_lowest(qs);
}

double epsilon_schedule(int episode, int total_episodes) {
    int half = std::max(1, total_episodes / 2);
    if (episode >= half) return 0.05;
    return 1.0 + (0.05 - 1.0) * static_cast<double>(episode) / half;
}

TdResult td_loss(const std::vector<const Transition*>& batch, const std::vector<Vec>& obs,
                 Mlp& qnet, const Mlp& target, double gamma) {
    if (batch.empty()) throw NetError("td_loss: empty batch");
    const double n = static_cast<double>(batch.size());
    TdResult res;
    res.d_obs.resize(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Transition& tr = *batch[i];
        double q_target = tr.reward;
        if (!tr.terminal) {
            MlpCache tc;
            Vec next_q = target.forward(tr.next_obs, tc);
            q_target += gamma * next_q.maxCoeff();
        }
        MlpCache cache;
        Vec q = qnet.forward(obs[i], cache);
        double diff = q[tr.action] - q_target;
        res.loss += diff * diff / n;
        Vec dq = Vec::Zero(q.size());
        dq[tr.action] = 2.0 * diff / n;
        res.d_obs[i] = qnet.backward(dq, cache);
    }
    return res;
}

}  // namespace evnav
