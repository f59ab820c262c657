#include "mfm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mfm/error.hpp"
#include "mfm/kde.hpp"

namespace mfm {

MetricReport straightness(const Mlp& model, const Sampler& q0, int n, const IntegrateOpts& opts,
                          Rng& rng) {
    if (n < 2) throw usage_error("straightness: n must be >= 2");
    const Field f = model_field(model);
    const int d = q0.dim();
    auto [mean, se] = mc_mean_stderr(n, rng, [&](int, Rng& sub) {
        const Batch x0b = q0.sample(1, sub);
        const double t = sub.uniform();
        std::vector<double> xt(x0b.x);
        if (t > 1e-12) {
            IntegrateOpts o = opts;
            o.method = OdeMethod::Adaptive54;
            o.t0 = 0.0;
            o.t1 = t;
            const Trajectory tr = integrate(f, x0b.row(0), o);
            xt = tr.end;
        }
        std::vector<double> v(d);
        forward(model, xt, t, v);
        double field_sq = 0.0;
        for (double w : v) field_sq += w * w;

        IntegrateOpts o2 = opts;
        o2.method = OdeMethod::Adaptive54;
        o2.t0 = t;
        o2.t1 = 1.0;
        const Trajectory tr2 = integrate(f, xt, o2);
        double disp_sq = 0.0;
        for (int j = 0; j < d; ++j) {
            const double r = tr2.end[j] - x0b.at(0, j);
            disp_sq += r * r;
        }
        return field_sq - disp_sq;
    });
    return MetricReport{"straightness", mean, se, n, "", 0.0};
}

MetricReport flow_transport_cost(const Mlp& model, const Sampler& q0, int n,
                                 const IntegrateOpts& opts, Rng& rng, const CostFn* eval_cost_fn) {
    if (n < 2) throw usage_error("flow_transport_cost: n must be >= 2");
    const CostFn fn = eval_cost_fn ? *eval_cost_fn : sq_euclidean_cost();
    const Field f = model_field(model);
    auto [mean, se] = mc_mean_stderr(n, rng, [&](int, Rng& sub) {
        const Batch x0b = q0.sample(1, sub);
        const Trajectory tr = integrate(f, x0b.row(0), opts);
        return eval_cost(fn, x0b.row(0), tr.end);
    });
    return MetricReport{"flow_transport_cost", mean, se, n, "", 0.0};
}

MetricReport kl_model(const Gmm& q1, const Mlp& model, const Sampler& base, int n,
                      const IntegrateOpts& opts, Rng& rng) {
    if (n < 2) throw usage_error("kl_model: n must be >= 2");
    auto [mean, se] = mc_mean_stderr(n, rng, [&](int, Rng& sub) {
        const Batch xb = sample_gmm(q1, sub, 1);
        const double lq = gmm_log_density(q1, xb.row(0));
        const double lp = model_log_density(model, base, xb.row(0), opts);
        return lq - lp;
    });
    return MetricReport{"kl_model", mean, se, n, "", 0.0};
}

MetricReport kl_static_samplebased(const Gmm& q1, const Mlp& static_map, const Sampler& q0, int n,
                                   Rng& rng) {
    if (n < 10000) throw usage_error("kl_static_samplebased: n must be >= 10000");
    Rng push_rng = rng.split(0);
    const Batch x0s = q0.sample(n, push_rng);
    const Batch pushed = forward_batch(static_map, x0s, nullptr);

    const Kde kde = fit_kde_scott(pushed);
    if (kde.degenerate) {
        // collapsed support: KL is unbounded, report the sentinel
        return MetricReport{"kl_static", std::numeric_limits<double>::infinity(), 0.0, n, "", 0.0};
    }

    const int n_eval = std::max(1000, n / 10);
    Rng eval_rng = rng.split(1);
    auto [mean, se] = mc_mean_stderr(n_eval, eval_rng, [&](int, Rng& sub) {
        const Batch xb = sample_gmm(q1, sub, 1);
        return gmm_log_density(q1, xb.row(0)) - kde_log_density(kde, xb.row(0));
    });
    return MetricReport{"kl_static", mean, se, n_eval, "", 0.0};
}

std::vector<MetricReport> consistency(const Mlp& model, const Sampler& q0,
                                      const std::vector<int>& m_values, int n, Rng& rng) {
    if (n < 2) throw usage_error("consistency: n must be >= 2");
    for (int m : m_values)
        if (m < 2 || m % 2 != 0)
            throw usage_error("consistency: midpoint needs an even NFE budget >= 2");
    const int d = q0.dim();
    const int nm = static_cast<int>(m_values.size());

    // shared draws: per x0 one reference solution and one midpoint run per m
    std::vector<std::vector<double>> per_m(nm, std::vector<double>(n, 0.0));
    const Field f = model_field(model);
    ParallelGuard guard;
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        guard.run([&, i] {
            Rng sub = rng.split(i);
            const Batch x0b = q0.sample(1, sub);
            IntegrateOpts ref_opts;
            ref_opts.method = OdeMethod::Adaptive54;
            ref_opts.atol = ref_opts.rtol = 1e-7;
            const Trajectory ref = integrate(f, x0b.row(0), ref_opts);
            for (int mi = 0; mi < nm; ++mi) {
                IntegrateOpts mo;
                mo.method = OdeMethod::Midpoint;
                mo.nfe_budget = m_values[mi];
                const Trajectory tm = integrate(f, x0b.row(0), mo);
                double sq = 0.0;
                for (int j = 0; j < d; ++j) {
                    const double r = tm.end[j] - ref.end[j];
                    sq += r * r;
                }
                per_m[mi][i] = sq / d;
            }
        });
    }
    guard.rethrow_if_any();

    std::vector<MetricReport> out;
    for (int mi = 0; mi < nm; ++mi) {
        double mean = 0.0;
        for (double v : per_m[mi]) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : per_m[mi]) var += (v - mean) * (v - mean);
        var /= std::max(1, n - 1);
        out.push_back(MetricReport{"consistency_m" + std::to_string(m_values[mi]), mean,
                                   std::sqrt(var / n), n, "", 0.0});
    }
    return out;
}

WelchResult welch_compare(const MetricReport& a, const MetricReport& b) {
    if (a.n < 2 || b.n < 2) throw usage_error("welch_compare: both reports need n >= 2");
    const double denom = std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_);
    const double z = denom > 0.0 ? (a.value - b.value) / denom : 0.0;
    return WelchResult{z, std::abs(z) >= 3.0};
}

void append_metric_jsonl(const std::string& path, const MetricReport& r) {
    std::FILE* f = std::fopen(path.c_str(), "ab");
    if (!f) throw io_error("cannot open '" + path + "' for appending");
    if (std::isfinite(r.value)) {
        std::fprintf(f, "{\"name\":\"%s\",\"value\":%.17g,\"stderr\":%.17g,\"n\":%ld,", r.name.c_str(),
                     r.value, r.stderr_, r.n);
    } else {
        std::fprintf(f, "{\"name\":\"%s\",\"value\":\"%s\",\"stderr\":%.17g,\"n\":%ld,",
                     r.name.c_str(), r.value > 0 ? "inf" : "-inf", r.stderr_, r.n);
    }
    std::fprintf(f, "\"config_hash\":\"%s\",\"wall_time_s\":%.6g}\n", r.config_hash.c_str(),
                 r.wall_time_s);
    if (std::fclose(f) != 0) throw io_error("write failed for '" + path + "'");
}

}  // namespace mfm
