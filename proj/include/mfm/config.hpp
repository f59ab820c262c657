#pragma once
#include <optional>
#include <string>
#include <vector>

#include "mfm/coupling.hpp"
#include "mfm/datasets.hpp"
#include "mfm/net.hpp"

namespace mfm {

// Dataset selector: "checkerboard", "normal" (standard Gaussian), "gmm"
// (random equal-weight mixture pinned by its own seed), or "csv".
struct DatasetSpec {
    std::string kind = "normal";
    int dim = 2;
    int centers = 1;
    double spread = 4.0;
    double std_dev = 0.5;
    std::uint64_t seed = 0;  // gmm center placement
    std::string path;        // csv
};

struct CostSpec {
    std::string kind = "sq_euclidean";
    std::string matrix_path;         // weighted_sq: load A from CSV
    std::optional<std::uint64_t> matrix_seed;  // or generate A from a seed
    int dim = 0;
};

struct CouplerSpec {
    std::string kind = "batchot";
    double epsilon = 0.1;  // batcheot: multiple of the batch mean cost
};

struct TrainSpec {
    int batch_size = 128;
    int epochs = 0;
    int steps = 0;  // takes precedence over epochs when > 0
    int n_train = 50000;
    double lr = 1e-3;
    std::vector<double> lr_candidates;
    int checkpoint_every = 0;
};

struct NetCfg {
    std::vector<int> hidden;             // empty = sized from param_budget
    std::string time_embedding = "auto";  // auto|concat|sinusoidal|none
    int n_freq = 8;
    int param_budget = 0;  // 0 = default for the data dimension
};

struct EvalSpec {
    std::vector<std::string> metrics;
    int n = 4000;
    int kl_n = 10000;
    std::vector<int> nfe_grid;
    std::vector<int> consistency_m = {4, 6, 8, 12};
    int n_samples = 2000;
    double atol = 1e-5;
    double rtol = 1e-5;
    int proxy_batches = 64;
};

// Fully determines a run: identical config plus seed replays identical
// result bytes (wall times excepted).
struct ExperimentConfig {
    std::uint64_t seed = 0;
    DatasetSpec q0, q1;
    CostSpec cost;
    CouplerSpec coupler;
    int k = 0;  // coupling block size; 0 = training batch size
    TrainSpec training;
    NetCfg net;
    EvalSpec eval;
    std::string out_dir = "runs/out";
};

// Strict parse: unknown keys anywhere are errors.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

// FNV-1a over the canonical serialization.
std::string config_hash(const ExperimentConfig& cfg);

Sampler make_sampler(const DatasetSpec& ds);
CostFn make_cost(const CostSpec& cs);
Coupler make_coupler(const CouplerSpec& cp, const CostSpec& cost);

// Network spec for the config's q0 dimension. Static maps pass
// time_embedding "none".
NetSpec make_net_spec(const NetCfg& nc, int dim);

}  // namespace mfm
