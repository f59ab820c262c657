#include "mfm/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "mfm/error.hpp"
#include "mfm/matching.hpp"

namespace mfm {

namespace fs = std::filesystem;

namespace {

// rng sub-stream tags: 0 = model init, 1 = eval, 100+s = training step s
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kEvalStream = 1;
constexpr std::uint64_t kStepStream = 100;

std::string ensure_run_dir(const ExperimentConfig& cfg) {
    const std::string dir = cfg.out_dir + "/" + config_hash(cfg);
    fs::create_directories(dir);
    std::ofstream out(dir + "/config.json");
    if (!out) throw io_error("cannot write config copy under '" + dir + "'");
    out << config_to_json(cfg) << "\n";
    return dir;
}

void write_curve(const std::string& path, const std::vector<double>& curve,
                 const std::string& hash) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw io_error("cannot open '" + path + "' for writing");
    std::fprintf(f, "# config %s\n", hash.c_str());
    std::fprintf(f, "step,loss\n");
    for (size_t i = 0; i < curve.size(); ++i) std::fprintf(f, "%zu,%.17g\n", i, curve[i]);
    if (std::fclose(f) != 0) throw io_error("write failed for '" + path + "'");
}

double tail_mean(const std::vector<double>& v, size_t tail) {
    if (v.empty()) return 0.0;
    const size_t n = std::min(tail, v.size());
    double acc = 0.0;
    for (size_t i = v.size() - n; i < v.size(); ++i) acc += v[i];
    return acc / n;
}

struct TrainLoop {
    const ExperimentConfig& cfg;
    bool static_map;

    std::pair<Mlp, std::vector<double>> run(double lr) const {
        const Sampler q0 = make_sampler(cfg.q0);
        const Sampler q1 = make_sampler(cfg.q1);
        if (q0.dim() != q1.dim()) throw usage_error("train: q0 and q1 dimensions differ");
        const Coupler coupler = make_coupler(cfg.coupler, cfg.cost);
        if (static_map && coupler.kind != CouplerKind::BatchOT)
            throw usage_error("train-static: coupler must be batchot");

        NetCfg net_cfg = cfg.net;
        if (static_map) net_cfg.time_embedding = "none";
        const NetSpec spec = make_net_spec(net_cfg, q0.dim());

        const Rng root(cfg.seed);
        Rng init_rng = root.split(kInitStream);
        Mlp model = init_model(spec, init_rng);
        AdamState adam = make_adam(model.params.size(), lr);

        const int batch = cfg.training.batch_size;
        const int block = cfg.k > 0 ? cfg.k : batch;
        if (block < 1 || batch % block != 0)
            throw usage_error("train: batch_size must be a multiple of the coupling size k");
        const int steps = resolve_steps(cfg.training);

        std::vector<double> curve;
        curve.reserve(steps);
        for (int s = 0; s < steps; ++s) {
            Rng sub = root.split(kStepStream + static_cast<std::uint64_t>(s));
            const Batch x0 = q0.sample(batch, sub);
            const Batch x1 = q1.sample(batch, sub);
            const PairBatch pairs = couple_in_blocks(coupler, x0, x1, block, sub);

            LossGrad lg;
            if (static_map) {
                lg = barycentric_loss(model, pairs);
            } else {
                const TrainBatch tb = make_train_samples(pairs, sub);
                lg = jcfm_loss(model, tb);
            }
            if (!std::isfinite(lg.loss))
                throw numerical_error("train: non-finite loss at step " + std::to_string(s) +
                                      " (config " + config_hash(cfg) + ")");
            adam_step(model, adam, lg.grad);
            curve.push_back(lg.loss);
        }
        return {std::move(model), std::move(curve)};
    }
};

TrainResult train_impl(const ExperimentConfig& cfg, bool sweep_lr, bool static_map) {
    const std::string run_dir = ensure_run_dir(cfg);
    const std::string hash = config_hash(cfg);
    const TrainLoop loop{cfg, static_map};

    std::vector<double> lrs = {cfg.training.lr};
    if (sweep_lr && !cfg.training.lr_candidates.empty()) lrs = cfg.training.lr_candidates;

    TrainResult best;
    double best_score = std::numeric_limits<double>::infinity();
    for (double lr : lrs) {
        auto [model, curve] = loop.run(lr);
        const double score = tail_mean(curve, 10);
        if (score < best_score) {
            best_score = score;
            best.model = std::move(model);
            best.curve = std::move(curve);
            best.chosen_lr = lr;
        }
    }
    best.adam = make_adam(best.model.params.size(), best.chosen_lr);
    best.run_dir = run_dir;

    write_curve(run_dir + (static_map ? "/static_curve.csv" : "/curve.csv"), best.curve, hash);
    save_checkpoint(run_dir + (static_map ? "/static.ckpt" : "/model.ckpt"), best.model);
    return best;
}

}  // namespace

int resolve_steps(const TrainSpec& t) {
    if (t.steps > 0) return t.steps;
    if (t.epochs > 0) {
        const int per_epoch = std::max(1, t.n_train / std::max(1, t.batch_size));
        return t.epochs * per_epoch;
    }
    return 0;
}

PairBatch couple_in_blocks(const Coupler& coupler, const Batch& x0, const Batch& x1, int block,
                           Rng& rng) {
    if (x0.k != x1.k) throw shape_error("couple_in_blocks: batch sizes differ");
    const int d = x0.d;
    PairBatch out{Batch(x0.k, d), Batch(x0.k, d)};
    // couplings are solved per block; with block == batch this is one solve
    for (int start = 0; start < x0.k; start += block) {
        Batch b0(block, d), b1(block, d);
        std::copy_n(x0.x.begin() + static_cast<size_t>(start) * d, static_cast<size_t>(block) * d,
                    b0.x.begin());
        std::copy_n(x1.x.begin() + static_cast<size_t>(start) * d, static_cast<size_t>(block) * d,
                    b1.x.begin());
        const PairBatch pb = sample_pairs(coupler, b0, b1, rng);
        std::copy(pb.x0.x.begin(), pb.x0.x.end(),
                  out.x0.x.begin() + static_cast<size_t>(start) * d);
        std::copy(pb.x1.x.begin(), pb.x1.x.end(),
                  out.x1.x.begin() + static_cast<size_t>(start) * d);
    }
    return out;
}

TrainResult cmd_train(const ExperimentConfig& cfg, bool sweep_lr) {
    return train_impl(cfg, sweep_lr, /*static_map=*/false);
}

TrainResult cmd_train_static(const ExperimentConfig& cfg, bool sweep_lr) {
    return train_impl(cfg, sweep_lr, /*static_map=*/true);
}

std::vector<MetricReport> cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint) {
    const std::string run_dir = ensure_run_dir(cfg);
    const std::string hash = config_hash(cfg);
    const Mlp model = load_checkpoint(checkpoint);

    const Sampler q0 = make_sampler(cfg.q0);
    const Sampler q1 = make_sampler(cfg.q1);
    const Rng root(cfg.seed);

    IntegrateOpts opts;
    opts.atol = cfg.eval.atol;
    opts.rtol = cfg.eval.rtol;

    std::vector<MetricReport> reports;
    const std::string jsonl = run_dir + "/metrics.jsonl";

    int metric_idx = 0;
    for (const std::string& name : cfg.eval.metrics) {
        Rng rng = root.split(kEvalStream).split(metric_idx++);
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<MetricReport> batch;
        if (name == "straightness") {
            batch.push_back(straightness(model, q0, cfg.eval.n, opts, rng));
        } else if (name == "transport_cost") {
            batch.push_back(flow_transport_cost(model, q0, cfg.eval.n, opts, rng));
        } else if (name == "kl_model") {
            const Gmm* g1 = q1.as_gmm();
            if (!g1) throw usage_error("kl_model needs an analytic gmm q1");
            batch.push_back(kl_model(*g1, model, q0, cfg.eval.kl_n, opts, rng));
        } else if (name == "kl_static") {
            const Gmm* g1 = q1.as_gmm();
            if (!g1) throw usage_error("kl_static needs an analytic gmm q1");
            batch.push_back(kl_static_samplebased(*g1, model, q0, cfg.eval.kl_n, rng));
        } else if (name == "consistency") {
            batch = consistency(model, q0, cfg.eval.consistency_m, cfg.eval.n, rng);
        } else if (name == "variance_proxy") {
            const Coupler coupler = make_coupler(cfg.coupler, cfg.cost);
            const int block = cfg.k > 0 ? cfg.k : cfg.training.batch_size;
            const ProxyEstimate pe =
                variance_proxy(model, coupler, q0, q1, block, cfg.eval.proxy_batches, rng);
            batch.push_back(
                MetricReport{"variance_proxy", pe.value, pe.stderr_, pe.n_batches, "", 0.0});
        } else {
            throw usage_error("unknown metric '" + name + "'");
        }
        const auto t1 = std::chrono::steady_clock::now();
        for (MetricReport& r : batch) {
            r.config_hash = hash;
            r.wall_time_s = std::chrono::duration<double>(t1 - t0).count() / batch.size();
            append_metric_jsonl(jsonl, r);
            reports.push_back(r);
        }
    }

    // sample grids: Euler at each requested NFE
    if (!cfg.eval.nfe_grid.empty()) {
        Rng rng = root.split(kEvalStream).split(9000);
        const Batch x0 = q0.sample(cfg.eval.n_samples, rng);
        for (int nfe : cfg.eval.nfe_grid) {
            IntegrateOpts o;
            o.method = OdeMethod::Euler;
            o.nfe_budget = nfe;
            const Batch samples = integrate_batch(model, x0, o);
            save_batch(run_dir + "/samples_nfe" + std::to_string(nfe) + ".csv", samples);
        }
    }
    return reports;
}

CoupleStats cmd_couple(const std::string& x0_csv, const std::string& x1_csv,
                       const CouplerSpec& coupler_spec, const CostSpec& cost_spec,
                       const std::string& out_pairs_csv) {
    const Batch x0 = load_batch(x0_csv);
    const Batch x1 = load_batch(x1_csv);
    if (x0.k != x1.k)
        throw shape_error("couple: batches differ in size (" + std::to_string(x0.k) + " vs " +
                          std::to_string(x1.k) + ")");
    if (x0.d != x1.d) throw shape_error("couple: batches differ in dimension");

    const Coupler coupler = make_coupler(coupler_spec, cost_spec);
    const CouplingResult res = couple(coupler, x0, x1);
    const Mat c = cost_matrix(coupler.cost, x0, x1);

    CoupleStats stats;
    Batch pairs(x0.k, 2 * x0.d);
    if (res.sigma) {
        for (int i = 0; i < x0.k; ++i) {
            for (int j = 0; j < x0.d; ++j) {
                pairs.at(i, j) = x0.at(i, j);
                pairs.at(i, x0.d + j) = x1.at((*res.sigma)[i], j);
            }
        }
        stats.total_cost = assignment_cost(c, *res.sigma);
        stats.mean_cost = stats.total_cost / x0.k;
        if (coupler.kind == CouplerKind::Stable || coupler.kind == CouplerKind::Heuristic)
            stats.blocking_pairs = count_blocking_pairs(*res.sigma, rankings_from_cost(c));
    } else {
        // emit the plan's expected pairing cost and a per-row argmax pairing
        stats.total_cost = plan_cost(*res.plan, c) * x0.k;
        stats.mean_cost = stats.total_cost / x0.k;
        stats.sinkhorn_converged = res.plan->converged;
        for (int i = 0; i < x0.k; ++i) {
            int jbest = 0;
            for (int j = 1; j < x0.k; ++j)
                if (res.plan->pi.at(i, j) > res.plan->pi.at(i, jbest)) jbest = j;
            for (int j = 0; j < x0.d; ++j) {
                pairs.at(i, j) = x0.at(i, j);
                pairs.at(i, x0.d + j) = x1.at(jbest, j);
            }
        }
    }
    save_batch(out_pairs_csv, pairs);
    return stats;
}

std::vector<SweepRow> cmd_sweep_k(const ExperimentConfig& cfg, const std::vector<int>& k_list,
                                  int resamples, bool train_flows) {
    if (k_list.empty()) throw usage_error("sweep-k: k list must be nonempty");
    const std::string run_dir = ensure_run_dir(cfg);
    const Sampler q0 = make_sampler(cfg.q0);
    const Sampler q1 = make_sampler(cfg.q1);
    const Coupler coupler = make_coupler(cfg.coupler, cfg.cost);
    const Rng root(cfg.seed);

    std::vector<SweepRow> rows;
    for (size_t i = 0; i < k_list.size(); ++i) {
        const int k = k_list[i];
        Rng rng = root.split(2000 + i);
        const MeanCost mc = mean_coupling_cost(coupler, q0, q1, k, resamples, rng, coupler.cost);
        SweepRow row;
        row.k = k;
        row.coupler = cfg.coupler.kind;
        row.coupling_cost = mc.mean;
        row.coupling_stderr = mc.stderr_;

        if (train_flows) {
            ExperimentConfig sub = cfg;
            sub.k = k;
            sub.out_dir = run_dir + "/k" + std::to_string(k);
            const TrainResult tr = cmd_train(sub);
            Rng eval_rng = root.split(3000 + i);
            IntegrateOpts opts;
            opts.atol = cfg.eval.atol;
            opts.rtol = cfg.eval.rtol;
            const MetricReport fc =
                flow_transport_cost(tr.model, q0, cfg.eval.n, opts, eval_rng, &coupler.cost);
            row.flow_cost = fc.value;
            row.flow_stderr = fc.stderr_;
            row.has_flow = true;
        }
        rows.push_back(row);
    }

    std::FILE* f = std::fopen((run_dir + "/sweep.csv").c_str(), "wb");
    if (!f) throw io_error("cannot write sweep.csv");
    std::fprintf(f, "# config %s\n", config_hash(cfg).c_str());
    std::fprintf(f, "k,coupler,coupling_cost,coupling_stderr,flow_cost,flow_stderr\n");
    for (const SweepRow& r : rows) {
        if (r.has_flow)
            std::fprintf(f, "%d,%s,%.17g,%.17g,%.17g,%.17g\n", r.k, r.coupler.c_str(),
                         r.coupling_cost, r.coupling_stderr, r.flow_cost, r.flow_stderr);
        else
            std::fprintf(f, "%d,%s,%.17g,%.17g,,\n", r.k, r.coupler.c_str(), r.coupling_cost,
                         r.coupling_stderr);
    }
    if (std::fclose(f) != 0) throw io_error("write failed for sweep.csv");
    return rows;
}

void cmd_gen_data(const DatasetSpec& ds, int n, std::uint64_t seed, const std::string& out_csv) {
    const Sampler s = make_sampler(ds);
    Rng rng(seed);
    save_batch(out_csv, s.sample(n, rng));
}

}  // namespace mfm
