#pragma once
#include <string>
#include <vector>

#include "mfm/config.hpp"
#include "mfm/flow.hpp"
#include "mfm/metrics.hpp"

namespace mfm {

struct TrainResult {
    Mlp model;
    AdamState adam;
    std::vector<double> curve;
    double chosen_lr = 0.0;
    std::string run_dir;  // out_dir/<config hash>
};

// sample pairs -> draw t -> regression loss -> Adam, for the configured
// number of steps. Writes curve.csv, config.json and model.ckpt under
// out_dir/<hash>. sweep_lr runs every lr candidate and keeps the one with
// the lowest tail-averaged train loss.
TrainResult cmd_train(const ExperimentConfig& cfg, bool sweep_lr = false);

// Static barycentric regression psi(x0) ~ x1 on coupled pairs; the coupler
// must be batchot. Writes static.ckpt.
TrainResult cmd_train_static(const ExperimentConfig& cfg, bool sweep_lr = false);

// Runs cfg.eval.metrics against a checkpoint, appends metrics.jsonl and
// writes samples_nfe<N>.csv per grid entry (Euler at that NFE).
std::vector<MetricReport> cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint);

struct CoupleStats {
    double total_cost = 0.0;
    double mean_cost = 0.0;
    long blocking_pairs = -1;  // stable/heuristic only
    bool sinkhorn_converged = true;
};
CoupleStats cmd_couple(const std::string& x0_csv, const std::string& x1_csv,
                       const CouplerSpec& coupler, const CostSpec& cost,
                       const std::string& out_pairs_csv);

struct SweepRow {
    int k = 0;
    std::string coupler;
    double coupling_cost = 0.0;
    double coupling_stderr = 0.0;
    double flow_cost = 0.0;  // when flows are trained
    double flow_stderr = 0.0;
    bool has_flow = false;
};
std::vector<SweepRow> cmd_sweep_k(const ExperimentConfig& cfg, const std::vector<int>& k_list,
                                  int resamples, bool train_flows);

void cmd_gen_data(const DatasetSpec& ds, int n, std::uint64_t seed, const std::string& out_csv);

// Training internals shared with the acceptance suite.
int resolve_steps(const TrainSpec& t);
PairBatch couple_in_blocks(const Coupler& coupler, const Batch& x0, const Batch& x1, int block,
                           Rng& rng);

}  // namespace mfm
