#pragma once

#include <Eigen/Core>
#include <vector>

#include "evnav/traffic_graph.hpp"

namespace evnav {

class Env;

// K-vector of expected queue minutes, one entry per EVCS, plus its softmax.
struct FccTensor {
    Eigen::VectorXd raw;    // minutes, >= 0 (unreachable entries hold the horizon sentinel)
    Eigen::VectorXd probs;  // softmax(sign * raw), sums to 1
};

// A rival EV's committed plan toward one EVCS: expected arrival minute and
// expected charging duration, both relative to now.
struct PlannedArrival {
    int ev;
    int evcs;
    double at_min;
    double ct_min;
};

// Expected travel minutes from `start` to the EVCS node, Dijkstra under the
// given field.
double arrival_time(const TrafficGraph& graph, const VelocityField& field,
                    const Position& start, int evcs_node);

// Minutes to refill from the projected arrival SOC at full power.
double charge_time(double soc_arrive, double capacity_kwh, double power_kw);

// My expected wait at an EVCS with `spots` charging spots, given every rival
// plan bound for it. Only plans arriving strictly before me (ties by lower
// ev id) matter; each arrival grabs the spot that frees up first.
double expected_queue(const std::vector<PlannedArrival>& plans,
                      const PlannedArrival& me, int spots);

Eigen::VectorXd softmax(const Eigen::VectorXd& x);

// Full FCC tensor for one EV at a node: hypothetical wait per EVCS given all
// rivals' committed plans and current spot occupancy.
FccTensor fcc_tensor(const Env& env, int ev);

}  // namespace evnav
