#include "evnav/traffic_graph.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

namespace evnav {

RoadClassTraits road_class_traits(RoadClass c) {
    switch (c) {
        case RoadClass::Green: return {120.0, 0.9, 0.05};
        case RoadClass::Yellow: return {80.0, 0.7, 0.10};
        case RoadClass::Red: return {60.0, 0.5, 0.15};
    }
    throw GraphError("unknown road class");
}

RoadClass road_class_from_string(const std::string& s) {
    if (s == "green") return RoadClass::Green;
    if (s == "yellow") return RoadClass::Yellow;
    if (s == "red") return RoadClass::Red;
    throw GraphError("unknown road class: " + s);
}

std::string to_string(RoadClass c) {
    switch (c) {
        case RoadClass::Green: return "green";
        case RoadClass::Yellow: return "yellow";
        case RoadClass::Red: return "red";
    }
    return "?";
}

TrafficGraph TrafficGraph::build(const GraphConfig& config) {
    if (config.node_count < 2) throw GraphError("graph needs at least 2 nodes");
    if (config.evcs_nodes.empty()) throw GraphError("graph needs at least one EVCS node");

    TrafficGraph g;
    g.node_count_ = config.node_count;
    g.evcs_nodes_ = config.evcs_nodes;
    g.adjacency_.resize(config.node_count);

    std::set<std::pair<int, int>> seen;
    for (const Edge& e : config.edges) {
        if (e.from == e.to) throw GraphError("self-loop edge rejected");
        if (e.from < 0 || e.from >= config.node_count || e.to < 0 || e.to >= config.node_count)
            throw GraphError("edge endpoint out of range");
        if (e.length_km <= 0) throw GraphError("edge length must be positive");
        auto key = std::minmax(e.from, e.to);
        if (!seen.insert({key.first, key.second}).second)
            throw GraphError("duplicate edge rejected");
        int idx = static_cast<int>(g.edges_.size());
        g.edges_.push_back(e);
        g.adjacency_[e.from].push_back({idx, e.to});
        if (!e.directed) g.adjacency_[e.to].push_back({idx, e.from});
    }

    for (int n : g.evcs_nodes_) {
        if (n < 0 || n >= config.node_count) throw GraphError("EVCS node id out of range");
    }

    // connectivity (BFS ignoring direction of directed edges would be wrong;
    // follow adjacency as built)
    std::vector<char> visited(config.node_count, 0);
    std::queue<int> q;
    q.push(0);
    visited[0] = 1;
    int count = 1;
    while (!q.empty()) {
        int n = q.front();
        q.pop();
        for (const Adjacent& a : g.adjacency_[n]) {
            if (!visited[a.neighbor]) {
                visited[a.neighbor] = 1;
                ++count;
                q.push(a.neighbor);
            }
        }
    }
    if (count != config.node_count) throw GraphError("graph is not connected");
    return g;
}

GraphConfig TrafficGraph::parse_config(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    GraphConfig cfg;
    cfg.node_count = j.at("nodes").get<int>();
    for (const auto& je : j.at("edges")) {
        Edge e;
        e.from = je.at("from").get<int>();
        e.to = je.at("to").get<int>();
        e.length_km = je.at("length_km").get<double>();
        e.cls = road_class_from_string(je.at("class").get<std::string>());
        e.directed = je.value("directed", false);
        cfg.edges.push_back(e);
    }
    cfg.evcs_nodes = j.at("evcs_nodes").get<std::vector<int>>();
    return cfg;
}

TrafficGraph TrafficGraph::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw GraphError("cannot open graph config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return build(parse_config(ss.str()));
}

int TrafficGraph::other_endpoint(int edge_index, int entry_node) const {
    const Edge& e = edges_[edge_index];
    return e.from == entry_node ? e.to : e.from;
}

VelocityField sample_velocities(const TrafficGraph& graph, SeededRng& rng) {
    VelocityField f;
    f.v_kmh.reserve(graph.edges().size());
    for (const Edge& e : graph.edges()) {
        RoadClassTraits t = road_class_traits(e.cls);
        double mean = t.mean_factor * t.speed_limit;
        double std = t.std_factor * t.speed_limit;
        f.v_kmh.push_back(rng.truncated_normal(mean, std, 0.0, t.speed_limit));
    }
    return f;
}

static double edge_minutes(double length_km, double v_kmh) {
    return length_km / v_kmh * 60.0;
}

Route shortest_path(const TrafficGraph& graph, const VelocityField& field,
                    const Position& start, int target) {
    double lead_time = 0.0;
    double lead_dist = 0.0;
    int start_node;
    if (const EdgePoint* ep = std::get_if<EdgePoint>(&start)) {
        const Edge& e = graph.edges()[ep->edge_index];
        double remaining = e.length_km - ep->offset_km;
        lead_time = edge_minutes(remaining, field.v_kmh[ep->edge_index]);
        lead_dist = remaining;
        start_node = graph.other_endpoint(ep->edge_index, ep->entry_node);
    } else {
        start_node = std::get<int>(start);
    }

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(graph.node_count(), inf);
    std::vector<int> prev(graph.node_count(), -1);
    // ties broken by lowest node id so routes are deterministic
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    dist[start_node] = 0.0;
    pq.push({0.0, start_node});
    while (!pq.empty()) {
        auto [d, n] = pq.top();
        pq.pop();
        if (d > dist[n]) continue;
        if (n == target) break;
        for (const auto& a : graph.adjacent(n)) {
            double nd = d + edge_minutes(graph.edges()[a.edge_index].length_km, field.v_kmh[a.edge_index]);
            if (nd < dist[a.neighbor] ||
                (nd == dist[a.neighbor] && prev[a.neighbor] != -1 && n < prev[a.neighbor])) {
                dist[a.neighbor] = nd;
                prev[a.neighbor] = n;
                pq.push({nd, a.neighbor});
            }
        }
    }
    if (dist[target] == inf) throw GraphError("target unreachable");

    Route r;
    for (int n = target; n != -1; n = prev[n]) r.node_seq.push_back(n);
    std::reverse(r.node_seq.begin(), r.node_seq.end());
    r.expected_time_min = lead_time + dist[target];
    r.distance_km = lead_dist;
    for (std::size_t i = 0; i + 1 < r.node_seq.size(); ++i) {
        for (const auto& a : graph.adjacent(r.node_seq[i])) {
            if (a.neighbor == r.node_seq[i + 1]) {
                r.distance_km += graph.edges()[a.edge_index].length_km;
                break;
            }
        }
    }
    return r;
}

}  // namespace evnav
