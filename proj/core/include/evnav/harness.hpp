#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evnav/cvae.hpp"
#include "evnav/dqn.hpp"
#include "evnav/mgda.hpp"
#include "evnav/sim_env.hpp"

namespace evnav {

enum class Method {
    ShortestPath,
    IQL,
    IQL_Global_FCC,
    IQL_LSTM_Only,
    IQL_CVAE_NoMGDA,
    IQL_CVAE_MGDA,
};

Method method_from_string(const std::string& s);
std::string to_string(Method m);

struct HyperParams {
    double lr_dqn = 5e-4;
    double lr_cvae = 1e-5;
    int batch_size = 16;
    double gamma = 0.99;
    std::size_t buffer_capacity = 1000000;
    int target_sync_steps = 100;  // environment steps between target syncs
    int dqn_hidden = 128;
    int cvae_hidden = 64;
    int cond_dim = 32;
    int latent_dim = 8;
    int lstm_layers = 2;
    int request_window = 8;
    bool ri_sample_prior = false;  // execution z ~ N(0,I) instead of prior mean
};

struct RunConfig {
    Method method = Method::IQL_CVAE_MGDA;
    int episodes = 1000;
    std::vector<std::uint64_t> seeds{1};
    std::vector<std::uint64_t> eval_seeds;
    std::string graph_path = "graph39.json";
    EnvConfig env;
    HyperParams hyper;
    int checkpoint_every = 100;
};

RunConfig load_run_config(const std::string& path);
// Looks up `name` as given, then under the bundled configs directory.
std::string resolve_config_path(const std::string& name);

struct EvalSeedResult {
    std::uint64_t seed;
    double cost;
    double sp_cost;
    double ratio;  // shortest-path cost / method cost
    Env::CostBreakdown breakdown;
};

struct EvalReport {
    std::vector<EvalSeedResult> per_seed;
    double mean_ratio = 0.0;
    double std_ratio = 0.0;
    double mean_cost = 0.0;
};

struct TrainOutcome {
    std::string run_dir;
    double final_cvae_loss = 0.0;  // mean KL+MSE over the last training steps
    EvalReport eval;               // filled when eval_seeds is non-empty
};

// Nearest-EVCS-by-expected-time baseline (ignores prices and queues).
int shortest_path_policy(const Env& env, int ev);

// Full training run for one (method, seed): writes
// <out_root>/<method>/<seed>/{config.snapshot, metrics.csv, train_steps.csv,
// trace.csv, checkpoints/, eval.csv}.
TrainOutcome train_run(const RunConfig& config, std::uint64_t seed,
                       const std::string& out_root);

// Greedy evaluation of a checkpoint on common-random-number seeds.
EvalReport evaluate_checkpoint(const RunConfig& config, const std::string& checkpoint_path,
                               const std::vector<std::uint64_t>& eval_seeds,
                               const std::string& eval_csv_out = "");

// Aggregates eval.csv files under runs_dir into a text table (returned) and
// writes report.csv next to them.
std::string make_report(const std::string& runs_dir);

}  // namespace evnav
