#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "evnav/rng.hpp"

namespace evnav {

enum class RoadClass { Green, Yellow, Red };

struct RoadClassTraits {
    double speed_limit;  // km/h
    double mean_factor;
    double std_factor;
};

RoadClassTraits road_class_traits(RoadClass c);
RoadClass road_class_from_string(const std::string& s);
std::string to_string(RoadClass c);

struct Edge {
    int from;
    int to;
    double length_km;
    RoadClass cls;
    bool directed = false;
};

struct GraphConfig {
    int node_count = 0;
    std::vector<Edge> edges;
    std::vector<int> evcs_nodes;
};

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Velocities per edge (indexed like TrafficGraph::edges), valid for one
// refresh window.
struct VelocityField {
    std::vector<double> v_kmh;
    double valid_from_min = 0.0;
    double valid_until_min = 0.0;
};

// Either a node, or a point on an edge `offset_km` from the edge's entry node.
struct EdgePoint {
    int edge_index;
    int entry_node;  // direction of travel: entry_node -> other endpoint
    double offset_km;
};
using Position = std::variant<int, EdgePoint>;

struct Route {
    std::vector<int> node_seq;
    double expected_time_min = 0.0;
    double distance_km = 0.0;
};

class TrafficGraph {
public:
    static TrafficGraph build(const GraphConfig& config);
    static TrafficGraph load(const std::string& path);
    static GraphConfig parse_config(const std::string& json_text);

    int node_count() const { return node_count_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<int>& evcs_nodes() const { return evcs_nodes_; }
    int evcs_count() const { return static_cast<int>(evcs_nodes_.size()); }

    struct Adjacent {
        int edge_index;
        int neighbor;
    };
    const std::vector<Adjacent>& adjacent(int node) const { return adjacency_[node]; }

    int other_endpoint(int edge_index, int entry_node) const;

private:
    int node_count_ = 0;
    std::vector<Edge> edges_;
    std::vector<int> evcs_nodes_;
    std::vector<std::vector<Adjacent>> adjacency_;
};

// One velocity per edge, drawn from the edge class's truncated normal
// (redraw until the value lands in (0, speed_limit]).
VelocityField sample_velocities(const TrafficGraph& graph, SeededRng& rng);

// Minimum expected-travel-time route with weights d/v (Dijkstra, ties broken
// toward the lowest node id). A mid-edge start must first run the current
// edge to its exit node. Throws GraphError when the target is unreachable.
Route shortest_path(const TrafficGraph& graph, const VelocityField& field,
                    const Position& start, int target);

}  // namespace evnav
