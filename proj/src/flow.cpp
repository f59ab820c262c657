#include "mfm/flow.hpp"

#include <cmath>

#include "mfm/error.hpp"
#include "mfm/parallel.hpp"

namespace mfm {

void cond_flow(std::span<const double> x0, std::span<const double> x1, double t,
               std::span<double> out) {
    if (x0.size() != x1.size() || x0.size() != out.size())
        throw shape_error("cond_flow: dimension mismatch");
    if (!(t >= 0.0 && t <= 1.0)) throw domain_error("cond_flow: t must lie in [0,1]");
    for (size_t j = 0; j < x0.size(); ++j) out[j] = (1.0 - t) * x0[j] + t * x1[j];
}

void cond_target_vf(std::span<const double> x0, std::span<const double> x1, std::span<double> out) {
    if (x0.size() != x1.size() || x0.size() != out.size())
        throw shape_error("cond_target_vf: dimension mismatch");
    for (size_t j = 0; j < x0.size(); ++j) out[j] = x1[j] - x0[j];
}

TrainBatch make_train_samples(const PairBatch& pairs, Rng& rng) {
    const int k = pairs.k();
    const int d = pairs.d();
    if (k < 1) throw shape_error("make_train_samples: empty pair batch");
    TrainBatch tb;
    tb.x0 = pairs.x0;
    tb.x1 = pairs.x1;
    tb.t.resize(k);
    tb.xt = Batch(k, d);
    tb.target = Batch(k, d);
    for (int i = 0; i < k; ++i) {
        tb.t[i] = rng.uniform();
        cond_flow(tb.x0.row(i), tb.x1.row(i), tb.t[i], tb.xt.row(i));
        cond_target_vf(tb.x0.row(i), tb.x1.row(i), tb.target.row(i));
    }
    return tb;
}

namespace {

// rows of [x_t | time features]
std::vector<double> assemble_features(const Mlp& model, const Batch& xt,
                                      const std::vector<double>& t) {
    const NetSpec& s = model.spec;
    if (xt.d != s.dim) throw shape_error("loss: data dim does not match network");
    const int in = s.in_features();
    std::vector<double> feat(static_cast<size_t>(xt.k) * in);
    for (int i = 0; i < xt.k; ++i) {
        double* row = feat.data() + static_cast<size_t>(i) * in;
        auto x = xt.row(i);
        std::copy(x.begin(), x.end(), row);
        if (s.time_features() > 0)
            embed_time(s, t[i], std::span<double>(row + s.dim, s.time_features()));
    }
    return feat;
}

LossGrad mse_loss_grad(const Mlp& model, const std::vector<double>& features, int rows,
                       const Batch& target) {
    LossGrad lg = loss_and_grad(model, [&](ad::Tape& tape) {
        const int feat = tape.constant(rows, model.spec.in_features(), features.data());
        const int out = tape_forward(tape, model, feat);
        const int tgt = tape.constant(rows, model.spec.dim, target.x.data());
        return tape.mean_row_sqnorm(tape.sub(out, tgt));
    });
    if (!std::isfinite(lg.loss)) throw numerical_error("loss: non-finite value in forward pass");
    return lg;
}

}  // namespace

LossGrad jcfm_loss(const Mlp& model, const TrainBatch& batch) {
    if (model.spec.embedding == TimeEmbedding::None)
        throw usage_error("jcfm_loss: model must be time-conditioned");
    const std::vector<double> feat = assemble_features(model, batch.xt, batch.t);
    return mse_loss_grad(model, feat, batch.k(), batch.target);
}

double jcfm_value(const Mlp& model, const TrainBatch& batch) {
    const Batch out = forward_batch(model, batch.xt, batch.t.data());
    double acc = 0.0;
    for (size_t i = 0; i < out.x.size(); ++i) {
        const double r = out.x[i] - batch.target.x[i];
        acc += r * r;
    }
    return acc / batch.k();
}

namespace ref {
LossGrad jcfm_loss(const Mlp& model, const TrainBatch& batch) {
    const int k = batch.k();
    LossGrad total;
    total.grad.assign(model.params.size(), 0.0);
    for (int i = 0; i < k; ++i) {
        TrainBatch tb;
        tb.xt = Batch(1, batch.xt.d);
        tb.target = Batch(1, batch.target.d);
        std::copy(batch.xt.row(i).begin(), batch.xt.row(i).end(), tb.xt.row(0).begin());
        std::copy(batch.target.row(i).begin(), batch.target.row(i).end(), tb.target.row(0).begin());
        tb.t.assign(1, batch.t[i]);
        const LossGrad lg = mfm::jcfm_loss(model, tb);
        total.loss += lg.loss;
        for (size_t p = 0; p < total.grad.size(); ++p) total.grad[p] += lg.grad[p];
    }
    total.loss /= k;
    for (double& g : total.grad) g /= k;
    return total;
}
}  // namespace ref

LossGrad barycentric_loss(const Mlp& static_map, const PairBatch& pairs) {
    if (static_map.spec.embedding != TimeEmbedding::None)
        throw usage_error("barycentric_loss: static map must not take time input");
    if (pairs.k() < 1) throw shape_error("barycentric_loss: empty pair batch");
    const std::vector<double> dummy_t;  // no time features
    const std::vector<double> feat =
        assemble_features(static_map, pairs.x0, dummy_t);
    return mse_loss_grad(static_map, feat, pairs.k(), pairs.x1);
}

double barycentric_value(const Mlp& static_map, const PairBatch& pairs) {
    const Batch out = forward_batch(static_map, pairs.x0, nullptr);
    double acc = 0.0;
    for (size_t i = 0; i < out.x.size(); ++i) {
        const double r = out.x[i] - pairs.x1.x[i];
        acc += r * r;
    }
    return acc / pairs.k();
}

ProxyEstimate variance_proxy(const Mlp& model, const Coupler& c, const Sampler& q0,
                             const Sampler& q1, int k, int n_batches, Rng& rng) {
    if (n_batches < 2) throw usage_error("variance_proxy: n_batches must be >= 2");
    std::vector<double> vals(n_batches);
    for (int b = 0; b < n_batches; ++b) {
        Rng sub = rng.split(b);
        JointStream stream(c, q0, q1, k);
        const PairBatch pairs = stream.next(sub);
        const TrainBatch tb = make_train_samples(pairs, sub);
        vals[b] = jcfm_value(model, tb);
    }
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= n_batches;
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= (n_batches - 1);
    return ProxyEstimate{mean, std::sqrt(var / n_batches), n_batches};
}

}  // namespace mfm
