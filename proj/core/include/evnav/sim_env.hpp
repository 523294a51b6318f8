#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evnav/rng.hpp"
#include "evnav/traffic_graph.hpp"

namespace evnav {

struct EnvConfig {
    int n_evs = 2;
    int spots_per_evcs = 2;
    double capacity_kwh = 60.0;
    double alpha_kwh_per_km = 0.15;   // consumption per km
    double pi_yuan_per_min = 0.4;     // 2 yuan per 5 minutes
    double power_kw = 60.0;
    double r_fail = 200.0;            // stranding penalty, yuan
    double horizon_min = 480.0;
    double price_period_min = 30.0;
    double velocity_period_min = 5.0;
    double fcc_softmax_sign = 1.0;    // -1 flips the queue-time softmax for sensitivity studies
};

enum class EvStatus { Driving, AtNode, Queuing, Charging, Done, Stranded };

struct EvState {
    int id = -1;
    EvStatus status = EvStatus::AtNode;
    int node = -1;            // valid while AtNode (and as segment entry while Driving)
    double soc = 0.0;         // as of the last node (or stranding point)
    int target_evcs = -1;     // committed action, -1 before the first decision
    Route route;              // committed route toward target_evcs

    // active segment while Driving
    int seg_edge = -1;
    int seg_exit_node = -1;
    double seg_entry_min = 0.0;
    double seg_entry_soc = 0.0;
    double seg_v_kmh = 0.0;
};

struct ChargeLogEntry {
    int ev;
    int spot;
    double arrive_min;
    double start_min;
    double finish_min;
};

struct EvcsState {
    int node = -1;
    double price_mean = 0.0;             // per-episode a, prices drawn around it
    std::vector<double> spot_busy_until; // minutes
    std::vector<ChargeLogEntry> log;
};

struct RewardRecord {
    int ev;
    double value;  // yuan, <= 0
    bool terminal;
};

struct TraceRow {
    double clock;
    int ev;
    std::string event;
    int node;  // -1 when mid-edge
    double soc;
    double reward;
    double cumulative_cost;
};

class EnvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Event-driven Dec-POMDP episode. All stochastic inputs (initial placement,
// velocities, prices) come from substreams of the episode seed, indexed by
// refresh-window number, so they are identical across policies on one seed.
class Env {
public:
    Env(const TrafficGraph& graph, const EnvConfig& config, std::uint64_t seed);

    // Advances the event loop until some EV stands at a node needing an
    // action; returns its id, or nullopt once every EV is terminal.
    std::optional<int> advance();

    // Routes `ev` (which must be the pending decision) toward EVCS `action`
    // and schedules its next arrival.
    void apply_action(int ev, int action);

    std::vector<RewardRecord> drain_rewards();

    double clock() const { return clock_; }
    const TrafficGraph& graph() const { return graph_; }
    const EnvConfig& config() const { return config_; }
    const EvState& ev(int id) const { return evs_.at(id); }
    const std::vector<EvState>& evs() const { return evs_; }
    const EvcsState& evcs(int k) const { return evcss_.at(k); }
    int evcs_count() const { return static_cast<int>(evcss_.size()); }

    // Piecewise-constant processes, refreshed every velocity/price period.
    const VelocityField& field_at(double minute) const;
    double price_at(int evcs, double minute) const;

    // Current position of an EV (mid-edge while Driving).
    Position position_of(int ev) const;
    double soc_of(int ev) const;  // exact SOC at the current clock

    // node one-hot + soc + ri; ri must be a probability vector.
    Eigen::VectorXd local_observation(int ev, const Eigen::VectorXd& ri) const;

    double total_cost(int ev) const { return cumulative_cost_.at(ev); }
    const std::vector<TraceRow>& trace() const { return trace_; }
    void write_trace_csv(const std::string& path) const;

    // Cost breakdown over the whole episode, yuan.
    struct CostBreakdown {
        double road_energy = 0.0;
        double drive_time = 0.0;
        double charging = 0.0;
        double wait_time = 0.0;
        double penalty = 0.0;
        double total() const { return road_energy + drive_time + charging + wait_time + penalty; }
    };
    const CostBreakdown& breakdown() const { return breakdown_; }

private:
    struct Event {
        double time;
        int ev;
        enum Kind { Decision, Arrival, Strand } kind;
        bool operator>(const Event& o) const {
            if (time != o.time) return time > o.time;
            return ev > o.ev;
        }
    };

    void settle_arrival(const Event& e);
    double enqueue_and_charge(int ev, int evcs_index);
    void push_reward(int ev, double value, bool terminal, const std::string& event, int node);
    int find_edge(int from, int to) const;

    const TrafficGraph& graph_;
    EnvConfig config_;
    std::uint64_t seed_;
    double clock_ = 0.0;
    std::vector<EvState> evs_;
    std::vector<EvcsState> evcss_;
    std::vector<Event> event_heap_;
    std::optional<int> pending_decision_;
    std::vector<RewardRecord> reward_queue_;
    std::vector<double> cumulative_cost_;
    std::vector<TraceRow> trace_;
    CostBreakdown breakdown_;

    mutable std::map<long, VelocityField> velocity_cache_;
    mutable std::map<std::pair<long, int>, double> price_cache_;
};

}  // namespace evnav
