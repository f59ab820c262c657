#pragma once
#include <optional>
#include <string>

#include "mfm/assignment.hpp"
#include "mfm/batch.hpp"
#include "mfm/cost.hpp"
#include "mfm/datasets.hpp"
#include "mfm/rng.hpp"
#include "mfm/sinkhorn.hpp"

namespace mfm {

enum class CouplerKind { Uniform, BatchOT, BatchEOT, Stable, Heuristic };

std::string coupler_kind_name(CouplerKind k);
CouplerKind coupler_kind_from_name(const std::string& name);

struct Coupler {
    CouplerKind kind = CouplerKind::Uniform;
    CostFn cost;                 // matching cost; unused by Uniform
    double epsilon_scale = 0.1;  // BatchEOT: epsilon = epsilon_scale * mean(C)
    SinkhornOpts sinkhorn;
};

// Per-batch coupling in whichever form the coupler produces. Permutation
// couplers keep sigma; BatchEOT and Uniform carry the dense matrix.
struct CouplingResult {
    std::optional<Permutation> sigma;
    std::optional<DoublyStochastic> plan;
    bool is_permutation() const { return sigma.has_value(); }
};

CouplingResult couple(const Coupler& c, const Batch& x0, const Batch& x1);

// The dense doubly-stochastic form regardless of coupler kind.
Mat coupling_matrix(const Coupler& c, const Batch& x0, const Batch& x1);

// k matched pairs, row-aligned.
struct PairBatch {
    Batch x0;
    Batch x1;
    int k() const { return x0.k; }
    int d() const { return x0.d; }
};

// One multisample round: draws the k pairs induced by the coupling of
// (x0, x1). Permutations emit each point exactly once; dense plans draw
// source index uniform then target from its row.
PairBatch sample_pairs(const Coupler& c, const Batch& x0, const Batch& x1, Rng& rng);

// Stream of coupled pairs over fresh k-batches from q0, q1.
class JointStream {
public:
    JointStream(Coupler c, Sampler q0, Sampler q1, int k);
    PairBatch next(Rng& rng);

private:
    Coupler coupler_;
    Sampler q0_, q1_;
    int k_;
};

// Collects ceil(n_pairs / k) rounds into one pair set.
PairBatch sample_joint(const Coupler& c, const Sampler& q0, const Sampler& q1, int k, int n_pairs,
                       Rng& rng);

// Monte Carlo estimate of the expected per-pair cost under the coupling,
// evaluated with eval_fn (which may differ from the matching cost).
// Exact per batch: permutations average C[i][sigma(i)], plans use <pi/k,C>.
struct MeanCost {
    double mean = 0.0;
    double stderr_ = 0.0;
    int resamples = 0;
};
MeanCost mean_coupling_cost(const Coupler& c, const Sampler& q0, const Sampler& q1, int k,
                            int resamples, Rng& rng, const CostFn& eval_fn);

}  // namespace mfm
