// Command-line front end: training runs, checkpoint evaluation, run-report
// aggregation, and quick self-tests against the reference oracles.
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "evnav/fcc.hpp"
#include "evnav/harness.hpp"
#include "evnav/oracles.hpp"

using namespace evnav;

namespace {

int env_threads() {
    const char* s = std::getenv("EVNAV_THREADS");
    if (!s) return 1;
    int n = std::atoi(s);
    return n > 0 ? n : 1;
}

// Random connected graph: spanning tree plus a few extra edges.
TrafficGraph random_graph(SeededRng& rng, int n) {
    GraphConfig cfg;
    cfg.node_count = n;
    std::set<std::pair<int, int>> used;
    auto add = [&](int u, int v) {
        Edge e;
        e.from = u;
        e.to = v;
        e.length_km = rng.uniform(1.0, 15.0);
        e.cls = static_cast<RoadClass>(rng.uniform_int(3));
        cfg.edges.push_back(e);
        used.insert(std::minmax(u, v));
    };
    for (int v = 1; v < n; ++v) add(rng.uniform_int(v), v);
    for (int tries = 0; tries < n; ++tries) {
        int u = rng.uniform_int(n), v = rng.uniform_int(n);
        if (u == v || used.count(std::minmax(u, v))) continue;
        add(u, v);
    }
    cfg.evcs_nodes = {0};
    return TrafficGraph::build(cfg);
}

int run_selftest(const std::string& suite) {
    int failures = 0;
    auto check = [&](const std::string& name, bool ok, double detail) {
        std::printf("[%s] %-40s %s (%.3e)\n", ok ? "ok" : "FAIL", name.c_str(),
                    ok ? "pass" : "fail", detail);
        if (!ok) ++failures;
    };

    if (suite == "oracle") {
        SeededRng rng(2024);
        double worst_q = 0.0;
        for (int i = 0; i < 200; ++i) {
            int spots = 1 + rng.uniform_int(2);
            int n_plans = rng.uniform_int(5);
            std::vector<PlannedArrival> plans;
            for (int p = 0; p < n_plans; ++p)
                plans.push_back({p, 0, rng.uniform(0.0, 60.0), rng.uniform(5.0, 60.0)});
            PlannedArrival me{100, 0, rng.uniform(0.0, 60.0), 30.0};
            double got = expected_queue(plans, me, spots);
            double want = oracles::queue_wait(plans, me, spots);
            worst_q = std::max(worst_q, std::abs(got - want));
        }
        check("expected_queue vs FIFO event sim", worst_q < 1e-9, worst_q);

        double worst_d = 0.0;
        for (int i = 0; i < 100; ++i) {
            TrafficGraph g = random_graph(rng, 4 + rng.uniform_int(30));
            VelocityField f = sample_velocities(g, rng);
            int s = rng.uniform_int(g.node_count());
            int t = rng.uniform_int(g.node_count());
            if (s == t) continue;
            Route r = shortest_path(g, f, s, t);
            double want = oracles::bellman_ford_minutes(g, f, s, t);
            worst_d = std::max(worst_d, std::abs(r.expected_time_min - want));
        }
        check("dijkstra vs bellman-ford", worst_d < 1e-9, worst_d);
        return failures ? 1 : 0;
    }

    if (suite == "grad") {
        SeededRng rng(77);
        {
            Mlp mlp("m", {5, 8, 3}, rng);
            Vec x(5), t(3);
            for (int i = 0; i < 5; ++i) x[i] = rng.normal(0, 1);
            for (int i = 0; i < 3; ++i) t[i] = rng.normal(0, 1);
            ParamVector p = mlp.params();
            auto loss = [&] {
                MlpCache c;
                return 0.5 * (mlp.forward(x, c) - t).squaredNorm();
            };
            p.zero_grads();
            MlpCache c;
            Vec y = mlp.forward(x, c);
            mlp.backward(y - t, c);
            double err = gradient_check(p, loss, p.flatten_grads());
            check("dense mlp gradient", err < 1e-4, err);
        }
        {
            Lstm lstm("l", 4, 6, 2, rng);
            std::vector<Vec> window(5);
            for (auto& v : window) {
                v = Vec(4);
                for (int i = 0; i < 4; ++i) v[i] = rng.normal(0, 1);
            }
            Vec t(6);
            for (int i = 0; i < 6; ++i) t[i] = rng.normal(0, 1);
            ParamVector p = lstm.params();
            auto loss = [&] {
                Lstm::Cache c;
                return 0.5 * (lstm.forward(window, c) - t).squaredNorm();
            };
            p.zero_grads();
            Lstm::Cache c;
            Vec h = lstm.forward(window, c);
            lstm.backward(h - t, c);
            double err = gradient_check(p, loss, p.flatten_grads());
            check("lstm bptt gradient", err < 1e-4, err);
        }
        {
            CvaeDims dims;
            dims.node_count = 6;
            dims.k = 4;
            dims.cond_dim = 5;
            dims.latent_dim = 3;
            dims.hidden = 7;
            dims.lstm_layers = 2;
            dims.window = 3;
            CvaePlatform pf(dims, rng);
            std::vector<Vec> window(3);
            for (auto& v : window) {
                v = Vec(dims.node_count + 2);
                for (int i = 0; i < v.size(); ++i) v[i] = rng.uniform(0, 1);
            }
            Vec x = softmax_vec(Vec::Random(dims.k));
            Vec eps(dims.latent_dim);
            for (int i = 0; i < eps.size(); ++i) eps[i] = rng.normal(0, 1);
            ParamVector p = pf.all_params();
            auto loss = [&] {
                CvaePlatform::Cache c;
                pf.forward_train(window, x, eps, c);
                return pf.kl_term(c) + pf.recon_mse(c, x);
            };
            p.zero_grads();
            CvaePlatform::Cache c;
            pf.forward_train(window, x, eps, c);
            pf.backward_cvae(c, x, 1.0, 1.0);
            double err = gradient_check(p, loss, p.flatten_grads());
            check("cvae elbo gradient", err < 1e-4, err);
        }
        return failures ? 1 : 0;
    }

    if (suite == "mgda") {
        SeededRng rng(55);
        double worst = 0.0;
        bool bounds_ok = true;
        for (int i = 0; i < 200; ++i) {
            int dim = 2 + rng.uniform_int(64);
            Vec gd(dim), gc(dim);
            for (int d = 0; d < dim; ++d) {
                gd[d] = rng.normal(0, 1);
                gc[d] = rng.normal(0, 1);
            }
            double a = mgda_alpha(gd, gc);
            if (a < 0.0 || a > 1.0) bounds_ok = false;
            double best = std::numeric_limits<double>::infinity();
            for (int s = 0; s <= 10000; ++s) {
                double t = s / 10000.0;
                best = std::min(best, (t * gd + (1 - t) * gc).norm());
            }
            worst = std::max(worst, (a * gd + (1 - a) * gc).norm() - best);
        }
        check("alpha within [0,1]", bounds_ok, 0.0);
        check("min-norm vs grid search", worst < 1e-6, worst);
        return failures ? 1 : 0;
    }

    std::fprintf(stderr, "unknown suite: %s\n", suite.c_str());
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EV charging navigation: training, evaluation, reporting"};
    app.require_subcommand(1);

    std::string config_path, method_str, out_root = "runs";
    std::vector<std::uint64_t> seeds;
    auto* train = app.add_subcommand("train", "train one method over one or more seeds");
    train->add_option("--config", config_path, "run config JSON")->required();
    train->add_option("--method", method_str, "override the config's method");
    train->add_option("--seed", seeds, "override the config's training seeds")->delimiter(',');
    train->add_option("--out", out_root, "runs output root");

    std::string ckpt_path, eval_csv;
    std::vector<std::uint64_t> eval_seeds;
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on common-random-number seeds");
    eval->add_option("--config", config_path, "run config JSON")->required();
    eval->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    eval->add_option("--seeds", eval_seeds, "evaluation seeds")->delimiter(',');
    eval->add_option("--csv", eval_csv, "write per-seed results here");

    std::string runs_dir;
    auto* report = app.add_subcommand("report", "aggregate eval results under a runs directory");
    report->add_option("--runs", runs_dir, "runs directory")->required();

    std::string suite;
    auto* selftest = app.add_subcommand("selftest", "check core math against reference oracles");
    selftest->add_option("--suite", suite, "oracle | grad | mgda")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            RunConfig cfg = load_run_config(config_path);
            if (!method_str.empty()) cfg.method = method_from_string(method_str);
            if (!seeds.empty()) cfg.seeds = seeds;
            int workers = std::min<int>(env_threads(), static_cast<int>(cfg.seeds.size()));
            std::atomic<std::size_t> next{0};
            std::mutex io;
            auto worker = [&] {
                for (;;) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= cfg.seeds.size()) return;
                    TrainOutcome out = train_run(cfg, cfg.seeds[i], out_root);
                    std::lock_guard<std::mutex> lk(io);
                    std::printf("%s seed %llu -> %s", to_string(cfg.method).c_str(),
                                static_cast<unsigned long long>(cfg.seeds[i]),
                                out.run_dir.c_str());
                    if (!cfg.eval_seeds.empty())
                        std::printf("  cost ratio %.4f +/- %.4f", out.eval.mean_ratio,
                                    out.eval.std_ratio);
                    std::printf("\n");
                }
            };
            std::vector<std::thread> pool;
            for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
            worker();
            for (auto& t : pool) t.join();
        } else if (*eval) {
            RunConfig cfg = load_run_config(config_path);
            if (eval_seeds.empty()) eval_seeds = cfg.eval_seeds;
            if (eval_seeds.empty()) throw std::runtime_error("no evaluation seeds given");
            EvalReport rep = evaluate_checkpoint(cfg, ckpt_path, eval_seeds, eval_csv);
            for (const auto& r : rep.per_seed)
                std::printf("seed %llu  cost %.2f  shortest-path %.2f  ratio %.4f\n",
                            static_cast<unsigned long long>(r.seed), r.cost, r.sp_cost, r.ratio);
            std::printf("mean ratio %.4f +/- %.4f  mean cost %.2f\n", rep.mean_ratio,
                        rep.std_ratio, rep.mean_cost);
        } else if (*report) {
            std::printf("%s", make_report(runs_dir).c_str());
        } else if (*selftest) {
            return run_selftest(suite);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
