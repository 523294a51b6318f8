#include "evnav/fcc.hpp"

#include <algorithm>
#include <cmath>

#include "evnav/sim_env.hpp"

namespace evnav {

double arrival_time(const TrafficGraph& graph, const VelocityField& field,
                    const Position& start, int evcs_node) {
    if (const int* n = std::get_if<int>(&start); n && *n == evcs_node) return 0.0;
    return shortest_path(graph, field, start, evcs_node).expected_time_min;
}

double charge_time(double soc_arrive, double capacity_kwh, double power_kw) {
    soc_arrive = std::clamp(soc_arrive, 0.0, 1.0);
    return (1.0 - soc_arrive) * capacity_kwh / power_kw * 60.0;
}

double expected_queue(const std::vector<PlannedArrival>& plans,
                      const PlannedArrival& me, int spots) {
    std::vector<PlannedArrival> earlier;
    for (const PlannedArrival& p : plans) {
        if (p.evcs != me.evcs) continue;
        if (p.at_min < me.at_min || (p.at_min == me.at_min && p.ev < me.ev))
            earlier.push_back(p);
    }
    std::sort(earlier.begin(), earlier.end(), [](const auto& a, const auto& b) {
        if (a.at_min != b.at_min) return a.at_min < b.at_min;
        return a.ev < b.ev;
    });

    // Each arrival grabs the spot that frees first; this reproduces the
    // single-spot cases of the closed form with the m=1 branch floored at 0.
    std::vector<double> busy(spots, 0.0);
    for (const PlannedArrival& p : earlier) {
        auto it = std::min_element(busy.begin(), busy.end());
        *it = std::max(p.at_min, *it) + p.ct_min;
    }
    double first_free = *std::min_element(busy.begin(), busy.end());
    return std::max(0.0, first_free - me.at_min);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& x) {
    Eigen::VectorXd e = (x.array() - x.maxCoeff()).exp();
    return e / e.sum();
}

FccTensor fcc_tensor(const Env& env, int ev_id) {
    const TrafficGraph& graph = env.graph();
    const EnvConfig& cfg = env.config();
    const EvState& me = env.ev(ev_id);
    if (me.status != EvStatus::AtNode)
        throw EnvError("fcc_tensor: EV must be at a node");
    const VelocityField& field = env.field_at(env.clock());
    const int K = env.evcs_count();

    // rivals' committed plans, frozen at this instant
    std::vector<std::vector<PlannedArrival>> plans(K);
    for (const EvState& other : env.evs()) {
        if (other.id == ev_id || other.target_evcs < 0) continue;
        if (other.status != EvStatus::Driving) continue;
        int j = other.target_evcs;
        double at = arrival_time(graph, field, env.position_of(other.id), env.evcs(j).node);
        double dist = shortest_path(graph, field, env.position_of(other.id),
                                    env.evcs(j).node).distance_km;
        double soc_arr = env.soc_of(other.id) - cfg.alpha_kwh_per_km * dist / cfg.capacity_kwh;
        plans[j].push_back({other.id, j, at, charge_time(soc_arr, cfg.capacity_kwh, cfg.power_kw)});
    }
    // spots already occupied count as arrivals at t=0 with the remaining time
    for (int j = 0; j < K; ++j) {
        const EvcsState& st = env.evcs(j);
        for (int s = 0; s < static_cast<int>(st.spot_busy_until.size()); ++s) {
            double rem = st.spot_busy_until[s] - env.clock();
            if (rem > 0) plans[j].push_back({-1000 - s, j, 0.0, rem});
        }
    }

    FccTensor t;
    t.raw.resize(K);
    for (int j = 0; j < K; ++j) {
        double at, dist;
        try {
            Route r = shortest_path(graph, field, me.node, env.evcs(j).node);
            at = r.expected_time_min;
            dist = r.distance_km;
        } catch (const GraphError&) {
            t.raw[j] = cfg.horizon_min;  // unreachable sentinel
            continue;
        }
        double soc_arr = me.soc - cfg.alpha_kwh_per_km * dist / cfg.capacity_kwh;
        PlannedArrival mine{ev_id, j, at, charge_time(soc_arr, cfg.capacity_kwh, cfg.power_kw)};
        t.raw[j] = expected_queue(plans[j], mine, cfg.spots_per_evcs);
    }
    t.probs = softmax(cfg.fcc_softmax_sign * t.raw);
    return t;
}

}  // namespace evnav
