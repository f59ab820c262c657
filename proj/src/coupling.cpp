#include "mfm/coupling.hpp"

#include <cmath>

#include "mfm/error.hpp"
#include "mfm/matching.hpp"

namespace mfm {

std::string coupler_kind_name(CouplerKind k) {
    switch (k) {
        case CouplerKind::Uniform: return "uniform";
        case CouplerKind::BatchOT: return "batchot";
        case CouplerKind::BatchEOT: return "batcheot";
        case CouplerKind::Stable: return "stable";
        case CouplerKind::Heuristic: return "heuristic";
    }
    return "?";
}

CouplerKind coupler_kind_from_name(const std::string& name) {
    if (name == "uniform" || name == "condot") return CouplerKind::Uniform;
    if (name == "batchot") return CouplerKind::BatchOT;
    if (name == "batcheot") return CouplerKind::BatchEOT;
    if (name == "stable") return CouplerKind::Stable;
    if (name == "heuristic") return CouplerKind::Heuristic;
    throw usage_error("unknown coupler kind '" + name + "'");
}

CouplingResult couple(const Coupler& c, const Batch& x0, const Batch& x1) {
    if (x0.k != x1.k) throw shape_error("couple: batches must have equal k");
    if (x0.d != x1.d) throw shape_error("couple: batches must have equal d");
    CouplingResult res;
    switch (c.kind) {
        case CouplerKind::Uniform: {
            DoublyStochastic ds;
            ds.pi = Mat(x0.k, x0.k);
            const double val = 1.0 / x0.k;
            for (double& v : ds.pi.v) v = val;
            // rows and columns each sum to 1/k * k = 1
            ds.converged = true;
            res.plan = std::move(ds);
            break;
        }
        case CouplerKind::BatchOT: {
            const Mat cm = cost_matrix(c.cost, x0, x1);
            res.sigma = solve_exact_assignment(cm).sigma;
            break;
        }
        case CouplerKind::BatchEOT: {
            if (!(c.epsilon_scale > 0.0)) throw domain_error("batcheot: epsilon must be > 0");
            const Mat cm = cost_matrix(c.cost, x0, x1);
            const double mean = mat_mean(cm);
            const double eps = c.epsilon_scale * (mean > 0.0 ? mean : 1.0);
            res.plan = sinkhorn(cm, eps, c.sinkhorn);
            break;
        }
        case CouplerKind::Stable: {
            const Mat cm = cost_matrix(c.cost, x0, x1);
            res.sigma = stable_coupling(rankings_from_cost(cm));
            break;
        }
        case CouplerKind::Heuristic: {
            const Mat cm = cost_matrix(c.cost, x0, x1);
            res.sigma = heuristic_coupling(rankings_from_cost(cm), cm);
            break;
        }
    }
    return res;
}

Mat coupling_matrix(const Coupler& c, const Batch& x0, const Batch& x1) {
    CouplingResult res = couple(c, x0, x1);
    if (res.plan) return std::move(res.plan->pi);
    const int k = x0.k;
    Mat pi(k, k);
    for (int i = 0; i < k; ++i) pi.at(i, (*res.sigma)[i]) = 1.0;
    return pi;
}

PairBatch sample_pairs(const Coupler& c, const Batch& x0, const Batch& x1, Rng& rng) {
    CouplingResult res = couple(c, x0, x1);
    const int k = x0.k;
    const int d = x0.d;
    PairBatch out{Batch(k, d), Batch(k, d)};
    if (res.sigma) {
        // every source and every target appears exactly once
        for (int i = 0; i < k; ++i) {
            auto src = x0.row(i), dst = x1.row((*res.sigma)[i]);
            std::copy(src.begin(), src.end(), out.x0.row(i).begin());
            std::copy(dst.begin(), dst.end(), out.x1.row(i).begin());
        }
        return out;
    }
    // dense plan: source index uniform, then target from that row (rows sum
    // to 1 after the sinkhorn normalization)
    const Mat& pi = res.plan->pi;
    for (int n = 0; n < k; ++n) {
        const int i = static_cast<int>(rng.uniform_int(k));
        const double u = rng.uniform();
        double acc = 0.0;
        int j = k - 1;
        for (int jj = 0; jj < k; ++jj) {
            acc += pi.at(i, jj);
            if (u < acc) {
                j = jj;
                break;
            }
        }
        auto src = x0.row(i), dst = x1.row(j);
        std::copy(src.begin(), src.end(), out.x0.row(n).begin());
        std::copy(dst.begin(), dst.end(), out.x1.row(n).begin());
    }
    return out;
}

JointStream::JointStream(Coupler c, Sampler q0, Sampler q1, int k)
    : coupler_(std::move(c)), q0_(std::move(q0)), q1_(std::move(q1)), k_(k) {
    if (k < 1) throw shape_error("joint stream: k must be >= 1");
}

PairBatch JointStream::next(Rng& rng) {
    const Batch x0 = q0_.sample(k_, rng);
    const Batch x1 = q1_.sample(k_, rng);
    return sample_pairs(coupler_, x0, x1, rng);
}

PairBatch sample_joint(const Coupler& c, const Sampler& q0, const Sampler& q1, int k, int n_pairs,
                       Rng& rng) {
    JointStream stream(c, q0, q1, k);
    const int rounds = (n_pairs + k - 1) / k;
    PairBatch all{Batch(rounds * k, q0.dim()), Batch(rounds * k, q1.dim())};
    for (int r = 0; r < rounds; ++r) {
        PairBatch batch = stream.next(rng);
        std::copy(batch.x0.x.begin(), batch.x0.x.end(),
                  all.x0.x.begin() + static_cast<size_t>(r) * k * q0.dim());
        std::copy(batch.x1.x.begin(), batch.x1.x.end(),
                  all.x1.x.begin() + static_cast<size_t>(r) * k * q1.dim());
    }
    all.x0.k = all.x1.k = n_pairs;
    all.x0.x.resize(static_cast<size_t>(n_pairs) * q0.dim());
    all.x1.x.resize(static_cast<size_t>(n_pairs) * q1.dim());
    return all;
}

MeanCost mean_coupling_cost(const Coupler& c, const Sampler& q0, const Sampler& q1, int k,
                            int resamples, Rng& rng, const CostFn& eval_fn) {
    if (resamples < 2) throw usage_error("mean_coupling_cost: resamples must be >= 2");
    std::vector<double> vals(resamples);
    for (int r = 0; r < resamples; ++r) {
        Rng sub = rng.split(r);
        const Batch x0 = q0.sample(k, sub);
        const Batch x1 = q1.sample(k, sub);
        const CouplingResult res = couple(c, x0, x1);
        const Mat ec = cost_matrix(eval_fn, x0, x1);
        if (res.sigma) {
            vals[r] = assignment_cost(ec, *res.sigma) / k;
        } else {
            vals[r] = plan_cost(*res.plan, ec);
        }
    }
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= resamples;
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= (resamples - 1);
    return MeanCost{mean, std::sqrt(var / resamples), resamples};
}

}  // namespace mfm
