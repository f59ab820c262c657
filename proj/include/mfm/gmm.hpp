#pragma once
#include <span>
#include <vector>

#include "mfm/batch.hpp"
#include "mfm/rng.hpp"

namespace mfm {

// Isotropic Gaussian mixture: shared scalar std per mixture. Serves as
// sampler, analytic density and KL reference for the synthetic experiments.
struct Gmm {
    int dim = 0;
    std::vector<double> weights;  // strictly positive, sum to 1
    std::vector<double> means;    // centers * dim, row-major
    double std_dev = 1.0;

    int centers() const { return static_cast<int>(weights.size()); }
    std::span<const double> mean(int c) const {
        return {means.data() + static_cast<size_t>(c) * dim, static_cast<size_t>(dim)};
    }
};

void validate_gmm(const Gmm& g);

Batch sample_gmm(const Gmm& g, Rng& rng, int n);

// log sum_c w_c N(x; mu_c, std^2 I), log-sum-exp stabilized.
double gmm_log_density(const Gmm& g, std::span<const double> x);

// Equal weights, means i.i.d. uniform in [-spread, spread]^d.
Gmm make_random_gmm(int d, int centers, double spread, double std_dev, Rng& rng);

// N(0, I_d) as a one-component mixture.
Gmm standard_normal_gmm(int d);

}  // namespace mfm
