#include "mfm/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mfm/error.hpp"

namespace mfm {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw usage_error("config: '" + where + "' must be an object");
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key))
            throw usage_error("config: unknown key '" + key + "' in '" + where + "'");
    }
}

DatasetSpec parse_dataset(const json& j, const std::string& where) {
    check_keys(j, where, {"kind", "dim", "centers", "spread", "std", "seed", "path"});
    DatasetSpec ds;
    ds.kind = j.value("kind", ds.kind);
    ds.dim = j.value("dim", ds.dim);
    ds.centers = j.value("centers", ds.centers);
    ds.spread = j.value("spread", ds.spread);
    ds.std_dev = j.value("std", ds.std_dev);
    ds.seed = j.value("seed", ds.seed);
    ds.path = j.value("path", ds.path);
    if (ds.kind != "checkerboard" && ds.kind != "normal" && ds.kind != "gmm" && ds.kind != "csv")
        throw usage_error("config: unknown dataset kind '" + ds.kind + "' in '" + where + "'");
    return ds;
}

json dataset_to_json(const DatasetSpec& ds) {
    return json{{"kind", ds.kind},  {"dim", ds.dim},   {"centers", ds.centers},
                {"spread", ds.spread}, {"std", ds.std_dev}, {"seed", ds.seed},
                {"path", ds.path}};
}

}  // namespace

ExperimentConfig parse_config_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw usage_error(std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(j, "<root>",
               {"seed", "q0", "q1", "cost", "coupler", "k", "training", "net", "eval", "out_dir"});

    ExperimentConfig cfg;
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("q0")) cfg.q0 = parse_dataset(j["q0"], "q0");
    if (j.contains("q1")) cfg.q1 = parse_dataset(j["q1"], "q1");

    if (j.contains("cost")) {
        const json& c = j["cost"];
        check_keys(c, "cost", {"kind", "matrix_path", "matrix_seed", "dim"});
        cfg.cost.kind = c.value("kind", cfg.cost.kind);
        cfg.cost.matrix_path = c.value("matrix_path", cfg.cost.matrix_path);
        if (c.contains("matrix_seed")) cfg.cost.matrix_seed = c["matrix_seed"].get<std::uint64_t>();
        cfg.cost.dim = c.value("dim", cfg.cost.dim);
        (void)cost_kind_from_name(cfg.cost.kind);
    }

    if (j.contains("coupler")) {
        const json& c = j["coupler"];
        check_keys(c, "coupler", {"kind", "epsilon"});
        cfg.coupler.kind = c.value("kind", cfg.coupler.kind);
        cfg.coupler.epsilon = c.value("epsilon", cfg.coupler.epsilon);
        (void)coupler_kind_from_name(cfg.coupler.kind);
    }

    cfg.k = j.value("k", cfg.k);

    if (j.contains("training")) {
        const json& t = j["training"];
        check_keys(t, "training",
                   {"batch_size", "epochs", "steps", "n_train", "lr", "lr_candidates",
                    "checkpoint_every"});
        cfg.training.batch_size = t.value("batch_size", cfg.training.batch_size);
        cfg.training.epochs = t.value("epochs", cfg.training.epochs);
        cfg.training.steps = t.value("steps", cfg.training.steps);
        cfg.training.n_train = t.value("n_train", cfg.training.n_train);
        cfg.training.lr = t.value("lr", cfg.training.lr);
        if (t.contains("lr_candidates"))
            cfg.training.lr_candidates = t["lr_candidates"].get<std::vector<double>>();
        cfg.training.checkpoint_every = t.value("checkpoint_every", cfg.training.checkpoint_every);
    }

    if (j.contains("net")) {
        const json& n = j["net"];
        check_keys(n, "net", {"hidden", "time_embedding", "n_freq", "param_budget"});
        if (n.contains("hidden")) cfg.net.hidden = n["hidden"].get<std::vector<int>>();
        cfg.net.time_embedding = n.value("time_embedding", cfg.net.time_embedding);
        cfg.net.n_freq = n.value("n_freq", cfg.net.n_freq);
        cfg.net.param_budget = n.value("param_budget", cfg.net.param_budget);
    }

    if (j.contains("eval")) {
        const json& e = j["eval"];
        check_keys(e, "eval",
                   {"metrics", "n", "kl_n", "nfe_grid", "consistency_m", "n_samples", "atol",
                    "rtol", "proxy_batches"});
        if (e.contains("metrics")) cfg.eval.metrics = e["metrics"].get<std::vector<std::string>>();
        cfg.eval.n = e.value("n", cfg.eval.n);
        cfg.eval.kl_n = e.value("kl_n", cfg.eval.kl_n);
        if (e.contains("nfe_grid")) cfg.eval.nfe_grid = e["nfe_grid"].get<std::vector<int>>();
        if (e.contains("consistency_m"))
            cfg.eval.consistency_m = e["consistency_m"].get<std::vector<int>>();
        cfg.eval.n_samples = e.value("n_samples", cfg.eval.n_samples);
        cfg.eval.atol = e.value("atol", cfg.eval.atol);
        cfg.eval.rtol = e.value("rtol", cfg.eval.rtol);
        cfg.eval.proxy_batches = e.value("proxy_batches", cfg.eval.proxy_batches);
    }

    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_json(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["q0"] = dataset_to_json(cfg.q0);
    j["q1"] = dataset_to_json(cfg.q1);
    j["cost"] = json{{"kind", cfg.cost.kind},
                     {"matrix_path", cfg.cost.matrix_path},
                     {"matrix_seed", cfg.cost.matrix_seed.value_or(0)},
                     {"dim", cfg.cost.dim}};
    j["coupler"] = json{{"kind", cfg.coupler.kind}, {"epsilon", cfg.coupler.epsilon}};
    j["k"] = cfg.k;
    j["training"] = json{{"batch_size", cfg.training.batch_size},
                         {"epochs", cfg.training.epochs},
                         {"steps", cfg.training.steps},
                         {"n_train", cfg.training.n_train},
                         {"lr", cfg.training.lr},
                         {"lr_candidates", cfg.training.lr_candidates},
                         {"checkpoint_every", cfg.training.checkpoint_every}};
    j["net"] = json{{"hidden", cfg.net.hidden},
                    {"time_embedding", cfg.net.time_embedding},
                    {"n_freq", cfg.net.n_freq},
                    {"param_budget", cfg.net.param_budget}};
    j["eval"] = json{{"metrics", cfg.eval.metrics},
                     {"n", cfg.eval.n},
                     {"kl_n", cfg.eval.kl_n},
                     {"nfe_grid", cfg.eval.nfe_grid},
                     {"consistency_m", cfg.eval.consistency_m},
                     {"n_samples", cfg.eval.n_samples},
                     {"atol", cfg.eval.atol},
                     {"rtol", cfg.eval.rtol},
                     {"proxy_batches", cfg.eval.proxy_batches}};
    j["out_dir"] = cfg.out_dir;
    return j.dump(2);
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string s = config_to_json(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

Sampler make_sampler(const DatasetSpec& ds) {
    if (ds.kind == "checkerboard") return Sampler::checkerboard();
    if (ds.kind == "normal") return Sampler::gmm(standard_normal_gmm(ds.dim));
    if (ds.kind == "gmm") {
        Rng rng(ds.seed);
        return Sampler::gmm(make_random_gmm(ds.dim, ds.centers, ds.spread, ds.std_dev, rng));
    }
    if (ds.kind == "csv") return Sampler::csv(ds.path);
    throw usage_error("unknown dataset kind '" + ds.kind + "'");
}

CostFn make_cost(const CostSpec& cs) {
    const CostKind kind = cost_kind_from_name(cs.kind);
    if (kind != CostKind::WeightedSq) return CostFn{kind, {}};
    if (!cs.matrix_path.empty()) {
        const Batch b = load_batch(cs.matrix_path);
        if (b.k != b.d) throw usage_error("weighted cost matrix must be square");
        Mat a(b.k, b.d);
        a.v = b.x;
        return weighted_sq_cost(std::move(a));
    }
    if (cs.matrix_seed.has_value()) {
        if (cs.dim < 1) throw usage_error("weighted cost from seed needs 'dim'");
        Rng rng(*cs.matrix_seed);
        return random_weighted_sq_cost(cs.dim, rng);
    }
    throw usage_error("weighted_sq cost needs 'matrix_path' or 'matrix_seed'");
}

Coupler make_coupler(const CouplerSpec& cp, const CostSpec& cost) {
    Coupler c;
    c.kind = coupler_kind_from_name(cp.kind);
    c.cost = make_cost(cost);
    c.epsilon_scale = cp.epsilon;
    return c;
}

NetSpec make_net_spec(const NetCfg& nc, int dim) {
    NetSpec s;
    s.dim = dim;
    s.n_freq = nc.n_freq;
    if (nc.time_embedding == "auto")
        s.embedding = dim <= 2 ? TimeEmbedding::ConcatScalar : TimeEmbedding::Sinusoidal;
    else if (nc.time_embedding == "concat")
        s.embedding = TimeEmbedding::ConcatScalar;
    else if (nc.time_embedding == "sinusoidal")
        s.embedding = TimeEmbedding::Sinusoidal;
    else if (nc.time_embedding == "none")
        s.embedding = TimeEmbedding::None;
    else
        throw usage_error("unknown time_embedding '" + nc.time_embedding + "'");
    if (!nc.hidden.empty()) {
        s.hidden = nc.hidden;
    } else {
        const int budget = nc.param_budget > 0 ? nc.param_budget : default_param_budget(dim);
        s.hidden = hidden_for_budget(s, budget);
    }
    validate_spec(s);
    return s;
}

}  // namespace mfm
