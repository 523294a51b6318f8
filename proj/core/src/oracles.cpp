#include "evnav/oracles.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace evnav::oracles {

double bellman_ford_minutes(const TrafficGraph& graph, const VelocityField& field,
                            int start, int target) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(graph.node_count(), inf);
    dist[start] = 0.0;
    for (int iter = 0; iter < graph.node_count() - 1; ++iter) {
        bool changed = false;
        for (int n = 0; n < graph.node_count(); ++n) {
            if (dist[n] == inf) continue;
            for (const auto& a : graph.adjacent(n)) {
                double w = graph.edges()[a.edge_index].length_km / field.v_kmh[a.edge_index] * 60.0;
                if (dist[n] + w < dist[a.neighbor]) {
                    dist[a.neighbor] = dist[n] + w;
                    changed = true;
                }
            }
        }
        if (!changed) break;
    }
    return dist[target];
}

double queue_wait(const std::vector<PlannedArrival>& plans,
                  const PlannedArrival& me, int spots) {
    // Central waiting line: arrivals join a FIFO queue and take the first
    // spot that frees. Timeline replayed event by event, including `me`.
    struct Arr {
        double at;
        int ev;
        double ct;
    };
    std::vector<Arr> arrivals;
    for (const PlannedArrival& p : plans)
        if (p.evcs == me.evcs) arrivals.push_back({p.at_min, p.ev, p.ct_min});
    arrivals.push_back({me.at_min, me.ev, me.ct_min});
    std::sort(arrivals.begin(), arrivals.end(), [](const Arr& a, const Arr& b) {
        if (a.at != b.at) return a.at < b.at;
        return a.ev < b.ev;
    });

    using FreeEvent = std::pair<double, int>;  // (time, spot)
    std::priority_queue<FreeEvent, std::vector<FreeEvent>, std::greater<FreeEvent>> frees;
    for (int s = 0; s < spots; ++s) frees.push({0.0, s});

    for (const Arr& a : arrivals) {
        auto [free_at, spot] = frees.top();
        frees.pop();
        double start = std::max(a.at, free_at);
        frees.push({start + a.ct, spot});
        if (a.ev == me.ev && a.at == me.at_min) return start - a.at;
    }
    return 0.0;  // unreachable
}

}  // namespace evnav::oracles
