#include "mfm/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfm/error.hpp"

namespace mfm {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

void validate_gmm(const Gmm& g) {
    if (g.dim < 1) throw shape_error("gmm: dim must be >= 1");
    if (g.weights.empty()) throw shape_error("gmm: needs at least one component");
    if (g.means.size() != g.weights.size() * static_cast<size_t>(g.dim))
        throw shape_error("gmm: means size does not match centers*dim");
    if (!(g.std_dev > 0.0)) throw domain_error("gmm: std must be > 0");
    double sum = 0.0;
    for (double w : g.weights) {
        if (!(w > 0.0)) throw domain_error("gmm: weights must be strictly positive");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw domain_error("gmm: weights must sum to 1");
    for (double m : g.means)
        if (!std::isfinite(m)) throw numerical_error("gmm: non-finite mean");
}

Batch sample_gmm(const Gmm& g, Rng& rng, int n) {
    validate_gmm(g);
    if (n < 1) throw shape_error("sample_gmm: n must be >= 1");
    Batch out(n, g.dim);
    for (int i = 0; i < n; ++i) {
        // component by CDF inversion, then isotropic Gaussian around its mean
        const double u = rng.uniform();
        double acc = 0.0;
        int c = g.centers() - 1;
        for (int j = 0; j < g.centers(); ++j) {
            acc += g.weights[j];
            if (u < acc) {
                c = j;
                break;
            }
        }
        auto mu = g.mean(c);
        auto row = out.row(i);
        for (int j = 0; j < g.dim; ++j) row[j] = mu[j] + g.std_dev * rng.normal();
    }
    return out;
}

double gmm_log_density(const Gmm& g, std::span<const double> x) {
    if (static_cast<int>(x.size()) != g.dim) throw shape_error("gmm_log_density: dimension mismatch");
    const double inv2var = 1.0 / (2.0 * g.std_dev * g.std_dev);
    const double log_norm = -0.5 * g.dim * kLog2Pi - g.dim * std::log(g.std_dev);
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(g.weights.size());
    for (int c = 0; c < g.centers(); ++c) {
        auto mu = g.mean(c);
        double sq = 0.0;
        for (int j = 0; j < g.dim; ++j) {
            const double dxj = x[j] - mu[j];
            sq += dxj * dxj;
        }
        terms[c] = std::log(g.weights[c]) + log_norm - sq * inv2var;
        max_term = std::max(max_term, terms[c]);
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - max_term);
    return max_term + std::log(acc);
}

Gmm make_random_gmm(int d, int centers, double spread, double std_dev, Rng& rng) {
    if (centers < 1) throw shape_error("make_random_gmm: centers must be >= 1");
    Gmm g;
    g.dim = d;
    g.std_dev = std_dev;
    g.weights.assign(centers, 1.0 / centers);
    g.means.resize(static_cast<size_t>(centers) * d);
    for (double& m : g.means) m = rng.uniform(-spread, spread);
    validate_gmm(g);
    return g;
}

Gmm standard_normal_gmm(int d) {
    Gmm g;
    g.dim = d;
    g.std_dev = 1.0;
    g.weights = {1.0};
    g.means.assign(d, 0.0);
    return g;
}

}  // namespace mfm
