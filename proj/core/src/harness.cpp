#include "evnav/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "evnav/fcc.hpp"

namespace fs = std::filesystem;

namespace evnav {

Method method_from_string(const std::string& s) {
    if (s == "shortest_path") return Method::ShortestPath;
    if (s == "iql") return Method::IQL;
    if (s == "iql_global_fcc") return Method::IQL_Global_FCC;
    if (s == "iql_lstm_only") return Method::IQL_LSTM_Only;
    if (s == "iql_cvae_nomgda") return Method::IQL_CVAE_NoMGDA;
    if (s == "iql_cvae_mgda") return Method::IQL_CVAE_MGDA;
    throw std::runtime_error("unknown method: " + s);
}

std::string to_string(Method m) {
    switch (m) {
        case Method::ShortestPath: return "shortest_path";
        case Method::IQL: return "iql";
        case Method::IQL_Global_FCC: return "iql_global_fcc";
        case Method::IQL_LSTM_Only: return "iql_lstm_only";
        case Method::IQL_CVAE_NoMGDA: return "iql_cvae_nomgda";
        case Method::IQL_CVAE_MGDA: return "iql_cvae_mgda";
    }
    return "?";
}

std::string resolve_config_path(const std::string& name) {
    if (fs::exists(name)) return name;
#ifdef EVNAV_CONFIG_DIR
    fs::path bundled = fs::path(EVNAV_CONFIG_DIR) / name;
    if (fs::exists(bundled)) return bundled.string();
#endif
    throw std::runtime_error("config file not found: " + name);
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(resolve_config_path(path));
    nlohmann::json j = nlohmann::json::parse(in);
    RunConfig c;
    if (j.contains("method")) c.method = method_from_string(j["method"].get<std::string>());
    c.episodes = j.value("episodes", c.episodes);
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("eval_seeds"))
        c.eval_seeds = j["eval_seeds"].get<std::vector<std::uint64_t>>();
    c.graph_path = j.value("graph", c.graph_path);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    if (j.contains("env")) {
        const auto& e = j["env"];
        c.env.n_evs = e.value("n_evs", c.env.n_evs);
        c.env.spots_per_evcs = e.value("spots_per_evcs", c.env.spots_per_evcs);
        c.env.capacity_kwh = e.value("capacity_kwh", c.env.capacity_kwh);
        c.env.alpha_kwh_per_km = e.value("alpha_kwh_per_km", c.env.alpha_kwh_per_km);
        c.env.pi_yuan_per_min = e.value("pi_yuan_per_min", c.env.pi_yuan_per_min);
        c.env.power_kw = e.value("power_kw", c.env.power_kw);
        c.env.r_fail = e.value("r_fail", c.env.r_fail);
        c.env.horizon_min = e.value("horizon_min", c.env.horizon_min);
        c.env.price_period_min = e.value("price_period_min", c.env.price_period_min);
        c.env.velocity_period_min = e.value("velocity_period_min", c.env.velocity_period_min);
        c.env.fcc_softmax_sign = e.value("fcc_softmax_sign", c.env.fcc_softmax_sign);
    }
    if (j.contains("hyper")) {
        const auto& h = j["hyper"];
        c.hyper.lr_dqn = h.value("lr_dqn", c.hyper.lr_dqn);
        c.hyper.lr_cvae = h.value("lr_cvae", c.hyper.lr_cvae);
        c.hyper.batch_size = h.value("batch_size", c.hyper.batch_size);
        c.hyper.gamma = h.value("gamma", c.hyper.gamma);
        c.hyper.buffer_capacity = h.value("buffer_capacity", c.hyper.buffer_capacity);
        c.hyper.target_sync_steps = h.value("target_sync_steps", c.hyper.target_sync_steps);
        c.hyper.dqn_hidden = h.value("dqn_hidden", c.hyper.dqn_hidden);
        c.hyper.cvae_hidden = h.value("cvae_hidden", c.hyper.cvae_hidden);
        c.hyper.cond_dim = h.value("cond_dim", c.hyper.cond_dim);
        c.hyper.latent_dim = h.value("latent_dim", c.hyper.latent_dim);
        c.hyper.lstm_layers = h.value("lstm_layers", c.hyper.lstm_layers);
        c.hyper.request_window = h.value("request_window", c.hyper.request_window);
        c.hyper.ri_sample_prior = h.value("ri_sample_prior", c.hyper.ri_sample_prior);
    }
    return c;
}

static nlohmann::json config_to_json(const RunConfig& c, std::uint64_t seed) {
    nlohmann::json j;
    j["method"] = to_string(c.method);
    j["seed"] = seed;
    j["episodes"] = c.episodes;
    j["eval_seeds"] = c.eval_seeds;
    j["graph"] = c.graph_path;
    j["checkpoint_every"] = c.checkpoint_every;
    j["env"] = {{"n_evs", c.env.n_evs},
                {"spots_per_evcs", c.env.spots_per_evcs},
                {"capacity_kwh", c.env.capacity_kwh},
                {"alpha_kwh_per_km", c.env.alpha_kwh_per_km},
                {"pi_yuan_per_min", c.env.pi_yuan_per_min},
                {"power_kw", c.env.power_kw},
                {"r_fail", c.env.r_fail},
                {"horizon_min", c.env.horizon_min},
                {"price_period_min", c.env.price_period_min},
                {"velocity_period_min", c.env.velocity_period_min},
                {"fcc_softmax_sign", c.env.fcc_softmax_sign}};
    j["hyper"] = {{"lr_dqn", c.hyper.lr_dqn},
                  {"lr_cvae", c.hyper.lr_cvae},
                  {"batch_size", c.hyper.batch_size},
                  {"gamma", c.hyper.gamma},
                  {"buffer_capacity", c.hyper.buffer_capacity},
                  {"target_sync_steps", c.hyper.target_sync_steps},
                  {"dqn_hidden", c.hyper.dqn_hidden},
                  {"cvae_hidden", c.hyper.cvae_hidden},
                  {"cond_dim", c.hyper.cond_dim},
                  {"latent_dim", c.hyper.latent_dim},
                  {"lstm_layers", c.hyper.lstm_layers},
                  {"request_window", c.hyper.request_window},
                  {"ri_sample_prior", c.hyper.ri_sample_prior}};
    return j;
}

int shortest_path_policy(const Env& env, int ev) {
    const VelocityField& field = env.field_at(env.clock());
    int best = 0;
    double best_at = std::numeric_limits<double>::infinity();
    for (int k = 0; k < env.evcs_count(); ++k) {
        double at;
        try {
            at = arrival_time(env.graph(), field, env.position_of(ev), env.evcs(k).node);
        } catch (const GraphError&) {
            continue;
        }
        if (at < best_at) {
            best_at = at;
            best = k;
        }
    }
    return best;
}

namespace {

bool uses_platform(Method m) {
    return m == Method::IQL_LSTM_Only || m == Method::IQL_CVAE_NoMGDA ||
           m == Method::IQL_CVAE_MGDA;
}
bool uses_cvae(Method m) {
    return m == Method::IQL_CVAE_NoMGDA || m == Method::IQL_CVAE_MGDA;
}
bool needs_fcc(Method m) {
    return m == Method::IQL_Global_FCC || uses_cvae(m);
}
bool trains_dqn(Method m) { return m != Method::ShortestPath; }

struct StepRow {
    long step;
    double dqn_loss, cvae_kl, cvae_recon, alpha, gnorm_d, gnorm_c;
};

struct Pipeline {
    const RunConfig& cfg;
    const TrafficGraph& graph;
    Method method;
    int K;
    int ri_dim;
    int obs_dim;
    std::optional<Mlp> qnet, qtarget;
    std::optional<CvaePlatform> platform;
    std::optional<JointTrainer> joint;
    std::optional<Adam> adam_q;
    std::optional<Adam> adam_lstm;
    ReplayBuffer buffer;
    long env_steps = 0;
    long train_steps = 0;
    std::vector<StepRow> step_log;
    std::deque<double> recent_cvae_loss;  // last steps, for the final-loss metric

    Pipeline(const RunConfig& c, const TrafficGraph& g, std::uint64_t seed)
        : cfg(c), graph(g), method(c.method), K(g.evcs_count()), buffer(c.hyper.buffer_capacity) {
        ri_dim = (method == Method::IQL_LSTM_Only) ? c.hyper.cond_dim : K;
        obs_dim = g.node_count() + 1 + ri_dim;
        SeededRng init = substream(seed, Stream::Training, 1);
        if (trains_dqn(method)) {
            qnet.emplace("qnet", std::vector<int>{obs_dim, c.hyper.dqn_hidden,
                                                  c.hyper.dqn_hidden, K}, init);
            qtarget.emplace("qtarget", std::vector<int>{obs_dim, c.hyper.dqn_hidden,
                                                        c.hyper.dqn_hidden, K}, init);
            qtarget->copy_from(*qnet);
        }
        if (uses_platform(method)) {
            CvaeDims dims;
            dims.node_count = g.node_count();
            dims.k = K;
            dims.cond_dim = c.hyper.cond_dim;
            dims.latent_dim = c.hyper.latent_dim;
            dims.hidden = c.hyper.cvae_hidden;
            dims.lstm_layers = c.hyper.lstm_layers;
            dims.window = c.hyper.request_window;
            platform.emplace(dims, init);
        }
        if (uses_cvae(method)) {
            JointHyper jh;
            jh.lr_dqn = c.hyper.lr_dqn;
            jh.lr_cvae = c.hyper.lr_cvae;
            jh.gamma = c.hyper.gamma;
            jh.use_mgda = (method == Method::IQL_CVAE_MGDA);
            joint.emplace(*qnet, *qtarget, *platform, jh);
        } else if (trains_dqn(method)) {
            adam_q.emplace(c.hyper.lr_dqn);
            if (method == Method::IQL_LSTM_Only) adam_lstm.emplace(c.hyper.lr_dqn);
        }
    }

    ParamVector checkpoint_params() {
        ParamVector p;
        if (qnet) p.extend(qnet->params());
        if (platform) p.extend(platform->all_params());
        return p;
    }

    double final_cvae_loss() const {
        if (recent_cvae_loss.empty()) return 0.0;
        double s = 0.0;
        for (double v : recent_cvae_loss) s += v;
        return s / static_cast<double>(recent_cvae_loss.size());
    }
};

struct Pending {
    bool active = false;
    Vec obs;
    int action = 0;
    double reward = 0.0;
    bool have_reward = false;
    Vec fcc_true;
    std::vector<Vec> window;
};

void assert_wiring(const Pipeline& p, const Vec& ri, const Vec& fcc_probs, const Vec& cond) {
    switch (p.method) {
        case Method::IQL:
        case Method::ShortestPath:
            if (!ri.isZero(0.0)) throw std::runtime_error("wiring: IQL RI must be zero");
            break;
        case Method::IQL_Global_FCC:
            if ((ri - fcc_probs).lpNorm<Eigen::Infinity>() > 0.0)
                throw std::runtime_error("wiring: RI must be the true FCC tensor");
            break;
        case Method::IQL_LSTM_Only:
            if ((ri - cond).lpNorm<Eigen::Infinity>() > 0.0)
                throw std::runtime_error("wiring: RI must be the condition label");
            break;
        default:
            if (std::abs(ri.sum() - 1.0) > 1e-6)
                throw std::runtime_error("wiring: reconstruction must be a probability vector");
    }
}

void train_step(Pipeline& p, SeededRng& rng_train) {
    const int batch_size = p.cfg.hyper.batch_size;
    if (p.buffer.size() < static_cast<std::size_t>(batch_size)) return;
    auto batch = p.buffer.sample(batch_size, rng_train);
    StepRow row{};
    row.step = ++p.train_steps;
    if (p.joint) {
        JointMetrics m = p.joint->step(batch, rng_train);
        row.dqn_loss = m.dqn_loss;
        row.cvae_kl = m.cvae_kl;
        row.cvae_recon = m.cvae_recon;
        row.alpha = m.alpha;
        row.gnorm_d = m.grad_norm_d;
        row.gnorm_c = m.grad_norm_c;
        p.recent_cvae_loss.push_back(m.cvae_kl + m.cvae_recon);
        while (p.recent_cvae_loss.size() > 50) p.recent_cvae_loss.pop_front();
    } else if (p.method == Method::IQL_LSTM_Only) {
        ParamVector qp = p.qnet->params();
        ParamVector lp = p.platform->lstm().params();
        qp.zero_grads();
        lp.zero_grads();
        // condition label recomputed from the stored window so the DQN loss
        // reaches the LSTM
        std::vector<Lstm::Cache> caches(batch.size());
        std::vector<Vec> obs(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            Vec c = p.platform->encode_condition(batch[i]->request_window, caches[i]);
            obs[i] = batch[i]->obs;
            obs[i].tail(p.ri_dim) = c;
        }
        TdResult td = td_loss(batch, obs, *p.qnet, *p.qtarget, p.cfg.hyper.gamma);
        for (std::size_t i = 0; i < batch.size(); ++i)
            p.platform->lstm().backward(td.d_obs[i].tail(p.ri_dim), caches[i]);
        p.adam_q->step(qp);
        p.adam_lstm->step(lp);
        row.dqn_loss = td.loss;
    } else {
        ParamVector qp = p.qnet->params();
        qp.zero_grads();
        std::vector<Vec> obs(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) obs[i] = batch[i]->obs;
        TdResult td = td_loss(batch, obs, *p.qnet, *p.qtarget, p.cfg.hyper.gamma);
        p.adam_q->step(qp);
        row.dqn_loss = td.loss;
    }
    p.step_log.push_back(row);
}

// One full episode. Returns the episode total cost (yuan, all EVs).
double run_episode(Pipeline& p, Env& env, double epsilon, bool train,
                   SeededRng& rng_policy, SeededRng& rng_train) {
    const int node_count = p.graph.node_count();
    std::vector<Pending> pending(env.config().n_evs);
    if (p.platform) p.platform->reset_runtime();

    auto complete = [&](int ev, const Vec& next_obs, bool terminal) {
        Pending& pd = pending[ev];
        if (!pd.active || !pd.have_reward) return;
        if (train && trains_dqn(p.method)) {
            Transition t;
            t.obs = pd.obs;
            t.action = pd.action;
            t.reward = pd.reward;
            t.next_obs = next_obs;
            t.terminal = terminal;
            t.fcc_true = pd.fcc_true;
            t.request_window = pd.window;
            p.buffer.push(std::move(t));
            train_step(p, rng_train);
        }
        pd = Pending{};
    };

    for (;;) {
        std::optional<int> who = env.advance();
        for (const RewardRecord& r : env.drain_rewards()) {
            pending[r.ev].reward = r.value;
            pending[r.ev].have_reward = true;
            if (r.terminal) complete(r.ev, Vec::Zero(p.obs_dim), true);
        }
        if (!who) break;
        int ev = *who;
        const EvState& st = env.ev(ev);

        Vec cond = Vec::Zero(p.cfg.hyper.cond_dim);
        std::vector<Vec> window;
        if (p.platform) {
            Vec req = encode_request(st.node, node_count, st.soc,
                                     env.clock() / env.config().horizon_min);
            cond = p.platform->push_request(req);
            window.assign(p.platform->window().begin(), p.platform->window().end());
        }

        Vec fcc_probs = Vec::Zero(p.K);
        if (needs_fcc(p.method)) fcc_probs = fcc_tensor(env, ev).probs;

        Vec ri;
        switch (p.method) {
            case Method::ShortestPath:
            case Method::IQL:
                ri = Vec::Zero(p.ri_dim);
                break;
            case Method::IQL_Global_FCC:
                ri = fcc_probs;
                break;
            case Method::IQL_LSTM_Only:
                ri = cond;
                break;
            default: {
                if (p.cfg.hyper.ri_sample_prior) {
                    Vec eps(p.cfg.hyper.latent_dim);
                    for (int d = 0; d < eps.size(); ++d) eps[d] = rng_policy.normal(0.0, 1.0);
                    ri = p.platform->generate_ri(&eps);
                } else {
                    ri = p.platform->generate_ri();
                }
                break;
            }
        }
        assert_wiring(p, ri, fcc_probs, cond);

        Vec obs = Vec::Zero(p.obs_dim);
        obs[st.node] = 1.0;
        obs[node_count] = st.soc;
        obs.tail(p.ri_dim) = ri;

        complete(ev, obs, false);

        int action;
        if (p.method == Method::ShortestPath) {
            action = shortest_path_policy(env, ev);
        } else {
            MlpCache qc;
            Vec qs = p.qnet->forward(obs, qc);
            action = select_action(qs, train ? epsilon : 0.0, rng_policy);
        }
        if (train && trains_dqn(p.method)) {
            Pending& pd = pending[ev];
            pd.active = true;
            pd.obs = obs;
            pd.action = action;
            pd.have_reward = false;
            pd.fcc_true = fcc_probs;
            pd.window = window;
        }
        env.apply_action(ev, action);
        ++p.env_steps;
        if (train && trains_dqn(p.method) &&
            p.env_steps % p.cfg.hyper.target_sync_steps == 0)
            p.qtarget->copy_from(*p.qnet);
    }
    return env.breakdown().total();
}

EvalReport evaluate_pipeline(Pipeline& p, const std::vector<std::uint64_t>& eval_seeds,
                             const std::string& csv_out) {
    EvalReport rep;
    SeededRng dummy(0);
    for (std::uint64_t es : eval_seeds) {
        Env env(p.graph, p.cfg.env, es);
        SeededRng rng_policy = substream(es, Stream::Policy, 0);
        double cost = run_episode(p, env, 0.0, false, rng_policy, dummy);

        RunConfig sp_cfg = p.cfg;
        sp_cfg.method = Method::ShortestPath;
        Pipeline sp(sp_cfg, p.graph, es);
        Env sp_env(p.graph, p.cfg.env, es);
        SeededRng sp_rng = substream(es, Stream::Policy, 0);
        double sp_cost = run_episode(sp, sp_env, 0.0, false, sp_rng, dummy);

        EvalSeedResult r;
        r.seed = es;
        r.cost = cost;
        r.sp_cost = sp_cost;
        r.ratio = sp_cost / cost;
        r.breakdown = env.breakdown();
        rep.per_seed.push_back(r);
    }
    double n = static_cast<double>(rep.per_seed.size());
    for (const auto& r : rep.per_seed) {
        rep.mean_ratio += r.ratio / n;
        rep.mean_cost += r.cost / n;
    }
    for (const auto& r : rep.per_seed)
        rep.std_ratio += (r.ratio - rep.mean_ratio) * (r.ratio - rep.mean_ratio) / std::max(1.0, n - 1);
    rep.std_ratio = std::sqrt(rep.std_ratio);

    if (!csv_out.empty()) {
        std::ofstream out(csv_out);
        out << "seed,cost,sp_cost,ratio,road_energy,drive_time,charging,wait_time,penalty\n";
        char buf[512];
        for (const auto& r : rep.per_seed) {
            std::snprintf(buf, sizeof buf, "%llu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                          static_cast<unsigned long long>(r.seed), r.cost, r.sp_cost, r.ratio,
                          r.breakdown.road_energy, r.breakdown.drive_time, r.breakdown.charging,
                          r.breakdown.wait_time, r.breakdown.penalty);
            out << buf;
        }
    }
    return rep;
}

}  // namespace

TrainOutcome train_run(const RunConfig& config, std::uint64_t seed, const std::string& out_root) {
    TrafficGraph graph = TrafficGraph::load(resolve_config_path(config.graph_path));
    fs::path dir = fs::path(out_root) / to_string(config.method) / std::to_string(seed);
    fs::create_directories(dir / "checkpoints");

    Pipeline p(config, graph, seed);
    SeededRng rng_policy = substream(seed, Stream::Policy, 1);
    SeededRng rng_train = substream(seed, Stream::Training, 2);

    {
        std::ofstream snap(dir / "config.snapshot");
        snap << config_to_json(config, seed).dump(2) << "\n";
    }

    std::ofstream metrics(dir / "metrics.csv");
    metrics << "episode,epsilon,total_cost,dqn_loss,cvae_kl,cvae_recon,alpha\n";

    int episodes = (config.method == Method::ShortestPath) ? 1 : config.episodes;
    char buf[512];
    for (int ep = 0; ep < episodes; ++ep) {
        double epsilon = epsilon_schedule(ep, config.episodes);
        std::size_t log_start = p.step_log.size();
        Env env(graph, config.env, mix_seed(seed, 777, static_cast<std::uint64_t>(ep)));
        double cost = run_episode(p, env, epsilon, true, rng_policy, rng_train);

        double dl = 0, kl = 0, rc = 0, al = 0;
        std::size_t cnt = p.step_log.size() - log_start;
        for (std::size_t i = log_start; i < p.step_log.size(); ++i) {
            dl += p.step_log[i].dqn_loss;
            kl += p.step_log[i].cvae_kl;
            rc += p.step_log[i].cvae_recon;
            al += p.step_log[i].alpha;
        }
        if (cnt > 0) {
            dl /= cnt;
            kl /= cnt;
            rc /= cnt;
            al /= cnt;
        }
        std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", ep, epsilon, cost,
                      dl, kl, rc, al);
        metrics << buf;

        if (p.qnet && (ep + 1) % config.checkpoint_every == 0) {
            ParamVector cp = p.checkpoint_params();
            save_checkpoint(cp, (dir / "checkpoints" / ("ep" + std::to_string(ep + 1) + ".ckpt")).string());
        }
        if (ep + 1 == episodes) env.write_trace_csv((dir / "trace.csv").string());
    }

    {
        std::ofstream steps(dir / "train_steps.csv");
        steps << "step,dqn_loss,cvae_kl,cvae_recon,alpha,grad_norm_d,grad_norm_c\n";
        for (const StepRow& r : p.step_log) {
            std::snprintf(buf, sizeof buf, "%ld,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.step,
                          r.dqn_loss, r.cvae_kl, r.cvae_recon, r.alpha, r.gnorm_d, r.gnorm_c);
            steps << buf;
        }
    }

    ParamVector cp = p.checkpoint_params();
    if (cp.size() > 0) save_checkpoint(cp, (dir / "checkpoints" / "final.ckpt").string());

    TrainOutcome out;
    out.run_dir = dir.string();
    out.final_cvae_loss = p.final_cvae_loss();
    if (!config.eval_seeds.empty())
        out.eval = evaluate_pipeline(p, config.eval_seeds, (dir / "eval.csv").string());
    return out;
}

EvalReport evaluate_checkpoint(const RunConfig& config, const std::string& checkpoint_path,
                               const std::vector<std::uint64_t>& eval_seeds,
                               const std::string& eval_csv_out) {
    TrafficGraph graph = TrafficGraph::load(resolve_config_path(config.graph_path));
    Pipeline p(config, graph, 0);
    ParamVector cp = p.checkpoint_params();
    if (cp.size() > 0) load_checkpoint(cp, checkpoint_path);
    return evaluate_pipeline(p, eval_seeds, eval_csv_out);
}

std::string make_report(const std::string& runs_dir) {
    struct Agg {
        std::vector<double> seed_means;
        std::vector<double> seed_costs;
    };
    std::map<std::string, Agg> by_method;
    for (const auto& mdir : fs::directory_iterator(runs_dir)) {
        if (!mdir.is_directory()) continue;
        for (const auto& sdir : fs::directory_iterator(mdir.path())) {
            fs::path evalcsv = sdir.path() / "eval.csv";
            if (!fs::exists(evalcsv)) continue;
            std::ifstream in(evalcsv);
            std::string line;
            std::getline(in, line);  // header
            double sum_ratio = 0, sum_cost = 0;
            int n = 0;
            while (std::getline(in, line)) {
                std::stringstream ss(line);
                std::string tok;
                std::vector<double> cols;
                while (std::getline(ss, tok, ',')) cols.push_back(std::stod(tok));
                if (cols.size() < 4) continue;
                sum_cost += cols[1];
                sum_ratio += cols[3];
                ++n;
            }
            if (n > 0) {
                by_method[mdir.path().filename().string()].seed_means.push_back(sum_ratio / n);
                by_method[mdir.path().filename().string()].seed_costs.push_back(sum_cost / n);
            }
        }
    }

    std::ostringstream table;
    table << "method,seeds,mean_cost_ratio,std_cost_ratio,mean_cost\n";
    std::ostringstream pretty;
    pretty << "Total cost ratio (shortest-path cost / method cost)\n";
    char buf[256];
    for (const auto& [name, agg] : by_method) {
        double n = static_cast<double>(agg.seed_means.size());
        double mean = 0, cost = 0;
        for (double v : agg.seed_means) mean += v / n;
        for (double v : agg.seed_costs) cost += v / n;
        double var = 0;
        for (double v : agg.seed_means) var += (v - mean) * (v - mean) / std::max(1.0, n - 1);
        std::snprintf(buf, sizeof buf, "%s,%d,%.4f,%.4f,%.2f\n", name.c_str(),
                      static_cast<int>(n), mean, std::sqrt(var), cost);
        table << buf;
        std::snprintf(buf, sizeof buf, "  %-18s %6.3f +/- %.3f  (%d seeds, mean cost %.2f)\n",
                      name.c_str(), mean, std::sqrt(var), static_cast<int>(n), cost);
        pretty << buf;
    }
    std::ofstream out(fs::path(runs_dir) / "report.csv");
    out << table.str();
    return pretty.str();
}

}  // namespace evnav
