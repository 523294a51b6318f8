#include "evnav/sim_env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace evnav {

static bool terminal_status(EvStatus s) {
    return s == EvStatus::Queuing || s == EvStatus::Charging || s == EvStatus::Done ||
           s == EvStatus::Stranded;
}

Env::Env(const TrafficGraph& graph, const EnvConfig& config, std::uint64_t seed)
    : graph_(graph), config_(config), seed_(seed) {
    const int n = config.n_evs;
    const int K = graph.evcs_count();
    if (n < 1) throw EnvError("need at least one EV");

    std::vector<int> free_nodes;
    for (int i = 0; i < graph.node_count(); ++i) {
        if (std::find(graph.evcs_nodes().begin(), graph.evcs_nodes().end(), i) ==
            graph.evcs_nodes().end())
            free_nodes.push_back(i);
    }
    if (static_cast<int>(free_nodes.size()) < n)
        throw EnvError("more EVs than non-EVCS nodes");

    SeededRng init = substream(seed, Stream::Init, 0);
    evs_.resize(n);
    cumulative_cost_.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        int pick = init.uniform_int(static_cast<int>(free_nodes.size()));
        evs_[i].id = i;
        evs_[i].node = free_nodes[pick];
        free_nodes.erase(free_nodes.begin() + pick);
        evs_[i].soc = init.uniform(0.4, 0.6);
        evs_[i].status = EvStatus::AtNode;
        event_heap_.push_back({0.0, i, Event::Decision});
    }
    evcss_.resize(K);
    for (int k = 0; k < K; ++k) {
        evcss_[k].node = graph.evcs_nodes()[k];
        evcss_[k].price_mean = init.uniform(0.3, 0.7);
        evcss_[k].spot_busy_until.assign(config.spots_per_evcs, 0.0);
    }
    std::make_heap(event_heap_.begin(), event_heap_.end(), std::greater<Event>());
}

const VelocityField& Env::field_at(double minute) const {
    long w = static_cast<long>(std::floor(minute / config_.velocity_period_min));
    auto it = velocity_cache_.find(w);
    if (it == velocity_cache_.end()) {
        SeededRng rng = substream(seed_, Stream::Velocity, static_cast<std::uint64_t>(w));
        VelocityField f = sample_velocities(graph_, rng);
        f.valid_from_min = w * config_.velocity_period_min;
        f.valid_until_min = (w + 1) * config_.velocity_period_min;
        it = velocity_cache_.emplace(w, std::move(f)).first;
    }
    return it->second;
}

double Env::price_at(int evcs, double minute) const {
    long w = static_cast<long>(std::floor(minute / config_.price_period_min));
    auto key = std::make_pair(w, evcs);
    auto it = price_cache_.find(key);
    if (it == price_cache_.end()) {
        double a = evcss_[evcs].price_mean;
        SeededRng rng = substream(seed_, Stream::Price,
                                  static_cast<std::uint64_t>(w) * 1024u + evcs);
        double lambda = rng.truncated_normal(a, 0.15 * a, 0.0,
                                             std::numeric_limits<double>::infinity());
        it = price_cache_.emplace(key, lambda).first;
    }
    return it->second;
}

Position Env::position_of(int ev) const {
    const EvState& e = evs_.at(ev);
    if (e.status == EvStatus::Driving || e.status == EvStatus::Stranded) {
        double elapsed = clock_ - e.seg_entry_min;
        double offset = e.seg_v_kmh * elapsed / 60.0;
        double len = graph_.edges()[e.seg_edge].length_km;
        return EdgePoint{e.seg_edge, e.node, std::min(offset, len)};
    }
    return e.node;
}

double Env::soc_of(int ev) const {
    const EvState& e = evs_.at(ev);
    if (e.status == EvStatus::Driving) {
        double km = e.seg_v_kmh * (clock_ - e.seg_entry_min) / 60.0;
        return std::max(0.0, e.seg_entry_soc - config_.alpha_kwh_per_km * km / config_.capacity_kwh);
    }
    return e.soc;
}

void Env::push_reward(int ev, double value, bool terminal, const std::string& event, int node) {
    reward_queue_.push_back({ev, value, terminal});
    cumulative_cost_[ev] -= value;
    trace_.push_back({clock_, ev, event, node, soc_of(ev), value, cumulative_cost_[ev]});
}

int Env::find_edge(int from, int to) const {
    for (const auto& a : graph_.adjacent(from))
        if (a.neighbor == to) return a.edge_index;
    throw EnvError("route step is not an edge");
}

double Env::enqueue_and_charge(int ev, int evcs_index) {
    EvcsState& st = evcss_[evcs_index];
    int spot = 0;
    for (int s = 1; s < static_cast<int>(st.spot_busy_until.size()); ++s)
        if (st.spot_busy_until[s] < st.spot_busy_until[spot]) spot = s;
    double wait = std::max(0.0, st.spot_busy_until[spot] - clock_);
    double start = clock_ + wait;
    double dur = (1.0 - evs_[ev].soc) * config_.capacity_kwh / config_.power_kw * 60.0;
    st.spot_busy_until[spot] = start + dur;
    st.log.push_back({ev, spot, clock_, start, start + dur});
    return wait;
}

void Env::settle_arrival(const Event& e) {
    EvState& ev = evs_[e.ev];
    const Edge& edge = graph_.edges()[ev.seg_edge];
    double len = edge.length_km;
    ev.soc = std::max(0.0, ev.seg_entry_soc -
                               config_.alpha_kwh_per_km * len / config_.capacity_kwh);
    ev.node = ev.seg_exit_node;
    int k = ev.target_evcs;
    double lambda = price_at(k, clock_);

    if (ev.node == evcss_[k].node) {
        double wait = enqueue_and_charge(e.ev, k);
        double energy = (1.0 - ev.soc) * config_.capacity_kwh;
        double value = -energy * lambda - config_.pi_yuan_per_min * wait;
        ev.status = wait > 0 ? EvStatus::Queuing : EvStatus::Charging;
        breakdown_.charging += energy * lambda;
        breakdown_.wait_time += config_.pi_yuan_per_min * wait;
        push_reward(e.ev, value, true, "charge", ev.node);
    } else {
        double minutes = len / ev.seg_v_kmh * 60.0;
        double value = -config_.alpha_kwh_per_km * lambda * len -
                       config_.pi_yuan_per_min * minutes;
        ev.status = EvStatus::AtNode;
        breakdown_.road_energy += config_.alpha_kwh_per_km * lambda * len;
        breakdown_.drive_time += config_.pi_yuan_per_min * minutes;
        push_reward(e.ev, value, false, "arrive", ev.node);
    }
}

std::optional<int> Env::advance() {
    if (pending_decision_)
        throw EnvError("previous decision is still pending");
    while (!event_heap_.empty()) {
        std::pop_heap(event_heap_.begin(), event_heap_.end(), std::greater<Event>());
        Event e = event_heap_.back();
        event_heap_.pop_back();
        clock_ = e.time;
        switch (e.kind) {
            case Event::Decision:
                pending_decision_ = e.ev;
                return e.ev;
            case Event::Arrival:
                settle_arrival(e);
                if (evs_[e.ev].status == EvStatus::AtNode) {
                    pending_decision_ = e.ev;
                    return e.ev;
                }
                break;
            case Event::Strand: {
                EvState& ev = evs_[e.ev];
                ev.soc = 0.0;
                ev.status = EvStatus::Stranded;
                push_reward(e.ev, -config_.r_fail, true, "strand", -1);
                breakdown_.penalty += config_.r_fail;
                break;
            }
        }
    }
    return std::nullopt;
}

void Env::apply_action(int ev_id, int action) {
    if (!pending_decision_ || *pending_decision_ != ev_id)
        throw EnvError("apply_action: EV has no pending decision");
    if (action < 0 || action >= evcs_count())
        throw EnvError("action out of range");
    EvState& ev = evs_[ev_id];
    if (ev.status != EvStatus::AtNode)
        throw EnvError("apply_action: EV is not at a node");
    pending_decision_.reset();

    ev.target_evcs = action;
    int target_node = evcss_[action].node;
    if (ev.node == target_node) {
        // standing on the chosen station: charge immediately
        double wait = enqueue_and_charge(ev_id, action);
        double lambda = price_at(action, clock_);
        double energy = (1.0 - ev.soc) * config_.capacity_kwh;
        double value = -energy * lambda - config_.pi_yuan_per_min * wait;
        ev.status = wait > 0 ? EvStatus::Queuing : EvStatus::Charging;
        ev.route = Route{{ev.node}, 0.0, 0.0};
        breakdown_.charging += energy * lambda;
        breakdown_.wait_time += config_.pi_yuan_per_min * wait;
        push_reward(ev_id, value, true, "charge", ev.node);
        return;
    }

    const VelocityField& field = field_at(clock_);
    ev.route = shortest_path(graph_, field, ev.node, target_node);
    int next_node = ev.route.node_seq[1];
    int edge = find_edge(ev.node, next_node);
    double len = graph_.edges()[edge].length_km;
    double v = field.v_kmh[edge];

    ev.status = EvStatus::Driving;
    ev.seg_edge = edge;
    ev.seg_exit_node = next_node;
    ev.seg_entry_min = clock_;
    ev.seg_entry_soc = ev.soc;
    ev.seg_v_kmh = v;

    double range_km = ev.soc * config_.capacity_kwh / config_.alpha_kwh_per_km;
    if (range_km < len) {
        event_heap_.push_back({clock_ + range_km / v * 60.0, ev_id, Event::Strand});
    } else {
        event_heap_.push_back({clock_ + len / v * 60.0, ev_id, Event::Arrival});
    }
    std::push_heap(event_heap_.begin(), event_heap_.end(), std::greater<Event>());
}

std::vector<RewardRecord> Env::drain_rewards() {
    std::vector<RewardRecord> out;
    out.swap(reward_queue_);
    return out;
}

Eigen::VectorXd Env::local_observation(int ev_id, const Eigen::VectorXd& ri) const {
    const EvState& ev = evs_.at(ev_id);
    if (terminal_status(ev.status)) throw EnvError("observation of a terminal EV");
    if (ev.status != EvStatus::AtNode) throw EnvError("observation of a mid-edge EV");
    double sum = ri.sum();
    if (std::abs(sum - 1.0) > 1e-6 || (ri.array() < -1e-12).any())
        throw EnvError("RI is not a probability vector");

    Eigen::VectorXd obs = Eigen::VectorXd::Zero(graph_.node_count() + 1 + ri.size());
    obs[ev.node] = 1.0;
    obs[graph_.node_count()] = ev.soc;
    obs.tail(ri.size()) = ri;
    return obs;
}

void Env::write_trace_csv(const std::string& path) const {
    std::ofstream out(path);
    out << "clock,ev,event,node,soc,reward,cumulative_cost\n";
    char buf[256];
    for (const TraceRow& r : trace_) {
        std::snprintf(buf, sizeof buf, "%.6f,%d,%s,%d,%.6f,%.6f,%.6f\n", r.clock, r.ev,
                      r.event.c_str(), r.node, r.soc, r.reward, r.cumulative_cost);
        out << buf;
    }
}

}  // namespace evnav
