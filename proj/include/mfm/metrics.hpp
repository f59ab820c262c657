#pragma once
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "mfm/cost.hpp"
#include "mfm/datasets.hpp"
#include "mfm/net.hpp"
#include "mfm/ode.hpp"
#include "mfm/parallel.hpp"
#include "mfm/rng.hpp"

namespace mfm {

struct MetricReport {
    std::string name;
    double value = 0.0;
    double stderr_ = 0.0;  // sample std / sqrt(n)
    long n = 0;
    std::string config_hash;
    double wall_time_s = 0.0;
};

// S = E_{t,x0}[ ||v_t(phi_t(x0))||^2 - ||phi_1(x0) - x0||^2 ]; both terms on
// the same x0 draw, with a fresh uniform t per draw. Nonnegative for the
// exact marginal field, zero iff trajectories are straight.
MetricReport straightness(const Mlp& model, const Sampler& q0, int n, const IntegrateOpts& opts,
                          Rng& rng);

// E[ c(x0, phi_1(x0)) ]; default cost is the squared Euclidean one.
MetricReport flow_transport_cost(const Mlp& model, const Sampler& q0, int n,
                                 const IntegrateOpts& opts, Rng& rng,
                                 const CostFn* eval_cost_fn = nullptr);

// KL(q1 || pushforward of base through the model), sampled under q1 with the
// exact flow density from divergence-augmented integration.
MetricReport kl_model(const Gmm& q1, const Mlp& model, const Sampler& base, int n,
                      const IntegrateOpts& opts, Rng& rng);

// KL(q1 || psi-pushforward of q0) for a static map with no tractable
// density: a Scott-rule KDE over n pushed samples stands in for the
// pushforward density. Collapsed pushforwards report +inf.
MetricReport kl_static_samplebased(const Gmm& q1, const Mlp& static_map, const Sampler& q0, int n,
                                   Rng& rng);

// (1/d) E || x^(m) - x^(*) ||^2 per m: midpoint solution with m field
// evaluations against a near-exact adaptive solution from the same x0.
std::vector<MetricReport> consistency(const Mlp& model, const Sampler& q0,
                                      const std::vector<int>& m_values, int n, Rng& rng);

struct WelchResult {
    double z = 0.0;
    bool significant = false;  // |z| >= 3
};
WelchResult welch_compare(const MetricReport& a, const MetricReport& b);

// One JSON object per line; wall time lives in its own field so value bytes
// replay across runs.
void append_metric_jsonl(const std::string& path, const MetricReport& r);

// Shared helper: mean/stderr over n parallel draws with split rng streams
// and a fixed reduction order.
template <class F>
std::pair<double, double> mc_mean_stderr(int n, Rng& rng, F&& per_draw) {
    std::vector<double> vals(n);
    ParallelGuard guard;
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        guard.run([&, i] {
            Rng sub = rng.split(i);
            vals[i] = per_draw(i, sub);
        });
    }
    guard.rethrow_if_any();
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= std::max(1, n - 1);
    return {mean, std::sqrt(var / n)};
}

}  // namespace mfm
