#pragma once
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfm/ad.hpp"
#include "mfm/batch.hpp"
#include "mfm/rng.hpp"

namespace mfm {

// How the scalar time enters the network input. None is for static maps
// psi(x) that have no time argument.
enum class TimeEmbedding { None, ConcatScalar, Sinusoidal };

struct NetSpec {
    int dim = 2;
    std::vector<int> hidden;
    TimeEmbedding embedding = TimeEmbedding::ConcatScalar;
    int n_freq = 8;

    int time_features() const {
        switch (embedding) {
            case TimeEmbedding::None: return 0;
            case TimeEmbedding::ConcatScalar: return 1;
            case TimeEmbedding::Sinusoidal: return 2 * n_freq;
        }
        return 0;
    }
    int in_features() const { return dim + time_features(); }
    int layers() const { return static_cast<int>(hidden.size()) + 1; }
};

void validate_spec(const NetSpec& s);

// Flat layout: per layer, W (out x in, row-major) then b (out).
struct ParamLayout {
    std::vector<int> w_off, b_off, in_dim, out_dim;
    int total = 0;
};
ParamLayout layout_of(const NetSpec& s);
int param_count(const NetSpec& s);

// Defaults used by the experiment configs: two equal hidden layers sized to
// a parameter budget keyed on the data dimension (50K for d<=2, 800K for
// d>=32), scalar-concat time for d<=2 and 8-frequency sinusoidal features
// above that.
int default_param_budget(int dim);
std::vector<int> hidden_for_budget(const NetSpec& base, int budget);
NetSpec default_field_spec(int dim);

struct Mlp {
    NetSpec spec;
    std::vector<double> params;
};

// Weights uniform in +-1/sqrt(fan_in), biases zero.
Mlp init_model(const NetSpec& s, Rng& rng);

// t -> time feature vector per the spec's embedding. Sinusoidal uses
// frequencies 2^j, j < n_freq: [sin(pi 2^j t), cos(pi 2^j t)].
void embed_time(const NetSpec& s, double t, std::span<double> out);

// v(x, t); pure. Throws numerical_error if the output is not finite.
void forward(const Mlp& m, std::span<const double> x, double t, std::span<double> out);

// Rows of xs through the network in parallel; ts may be null when the spec
// has no time input.
Batch forward_batch(const Mlp& m, const Batch& xs, const double* ts);

// sum_i dv_i/dx_i at (x, t) via one forward-mode pass per coordinate.
double divergence(const Mlp& m, std::span<const double> x, double t);

// Builds the network graph on a tape: features (rows x in_features) through
// every layer, swish between, linear last. Returns the output buffer id.
int tape_forward(ad::Tape& tape, const Mlp& m, int features_buf);

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

// Generic reverse-mode entry point: build receives a tape bound to the
// model parameters and returns the scalar loss buffer id.
template <class Build>
LossGrad loss_and_grad(const Mlp& m, Build&& build) {
    LossGrad out;
    out.grad.assign(m.params.size(), 0.0);
    ad::Tape tape(m.params, out.grad);
    const int loss_id = build(tape);
    out.loss = tape.value(loss_id);
    tape.backward(loss_id);
    return out;
}

struct AdamState {
    long step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    std::vector<double> m, v;
};

AdamState make_adam(size_t n_params, double lr);
void adam_step(Mlp& model, AdamState& st, std::span<const double> grad);

// Text checkpoint: self-describing header plus one hex-float per parameter
// line, so a save/load round trip is bit exact. Adam moments are stored the
// same way when present.
void save_checkpoint(const std::string& path, const Mlp& m, const AdamState* st = nullptr);
Mlp load_checkpoint(const std::string& path, AdamState* st = nullptr,
                    const NetSpec* expected = nullptr);

}  // namespace mfm
