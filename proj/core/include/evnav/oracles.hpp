#pragma once

#include <vector>

#include "evnav/fcc.hpp"
#include "evnav/traffic_graph.hpp"

// Reference implementations kept deliberately independent of the production
// code paths they check. Used by the test suites and `evnav selftest`.
namespace evnav::oracles {

// Bellman-Ford expected travel minutes between two nodes; returns +inf when
// unreachable. Same d/v weight arithmetic as shortest_path.
double bellman_ford_minutes(const TrafficGraph& graph, const VelocityField& field,
                            int start, int target);

// Event-driven FIFO queue simulation (central waiting line, first free spot).
double queue_wait(const std::vector<PlannedArrival>& plans,
                  const PlannedArrival& me, int spots);

}  // namespace evnav::oracles
