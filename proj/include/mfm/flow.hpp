#pragma once
#include <span>

#include "mfm/coupling.hpp"
#include "mfm/net.hpp"

namespace mfm {

// Straight-line conditional path: x_t = (1-t) x0 + t x1, target field x1-x0.
void cond_flow(std::span<const double> x0, std::span<const double> x1, double t,
               std::span<double> out);
void cond_target_vf(std::span<const double> x0, std::span<const double> x1, std::span<double> out);

// Row-aligned training tuples: per pair one t ~ U[0,1], the interpolated
// point and the constant regression target.
struct TrainBatch {
    Batch x0, x1;
    std::vector<double> t;
    Batch xt;
    Batch target;
    int k() const { return xt.k; }
};

TrainBatch make_train_samples(const PairBatch& pairs, Rng& rng);

// Mean over the batch of ||v(x_t, t) - (x1 - x0)||^2, with gradient.
LossGrad jcfm_loss(const Mlp& model, const TrainBatch& batch);
double jcfm_value(const Mlp& model, const TrainBatch& batch);

namespace ref {
// Serial reference: accumulates the same loss sample by sample.
LossGrad jcfm_loss(const Mlp& model, const TrainBatch& batch);
}  // namespace ref

// Mean over coupled pairs of ||psi(x0) - x1||^2 for a static (time-free) map.
LossGrad barycentric_loss(const Mlp& static_map, const PairBatch& pairs);
double barycentric_value(const Mlp& static_map, const PairBatch& pairs);

// Monte Carlo estimate of the objective at fixed parameters over fresh
// coupled batches; the per-batch means are the independent draws.
struct ProxyEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    int n_batches = 0;
};
ProxyEstimate variance_proxy(const Mlp& model, const Coupler& c, const Sampler& q0,
                             const Sampler& q1, int k, int n_batches, Rng& rng);

}  // namespace mfm
