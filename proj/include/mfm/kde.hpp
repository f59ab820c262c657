#pragma once
#include <span>

#include "mfm/batch.hpp"

namespace mfm {

// Product Gaussian kernel density with Scott's rule bandwidths
// h_j = sigma_j * n^(-1/(d+4)). Degenerate fits (a coordinate with ~zero
// spread) are flagged rather than silently clamped.
struct Kde {
    Batch data;
    std::vector<double> h;
    double log_norm = 0.0;  // -sum_j log h_j - d/2 log(2 pi) - log n
    bool degenerate = false;
};

Kde fit_kde_scott(const Batch& sample);

// log (1/n) sum_i prod_j N((x_j - X_ij)/h_j) / h_j, log-sum-exp stabilized.
double kde_log_density(const Kde& k, std::span<const double> x);

namespace ref {
double kde_log_density(const Kde& k, std::span<const double> x);
}

// Parallel over evaluation rows.
std::vector<double> kde_log_density_batch(const Kde& k, const Batch& xs);

}  // namespace mfm
