#include "mfm/kde.hpp"

#include <cmath>
#include <limits>

#include "mfm/error.hpp"

namespace mfm {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_density_impl(const Kde& k, std::span<const double> x) {
    if (static_cast<int>(x.size()) != k.data.d) throw shape_error("kde: dimension mismatch");
    if (k.degenerate) return -std::numeric_limits<double>::infinity();
    const int n = k.data.k;
    const int d = k.data.d;
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> expo(n);
    for (int i = 0; i < n; ++i) {
        auto row = k.data.row(i);
        double s = 0.0;
        for (int j = 0; j < d; ++j) {
            const double z = (x[j] - row[j]) / k.h[j];
            s += z * z;
        }
        expo[i] = -0.5 * s;
        mx = std::max(mx, expo[i]);
    }
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += std::exp(expo[i] - mx);
    return k.log_norm + mx + std::log(acc);
}

}  // namespace

Kde fit_kde_scott(const Batch& sample) {
    validate_batch(sample, "kde sample");
    const int n = sample.k;
    const int d = sample.d;
    Kde k;
    k.data = sample;
    k.h.assign(d, 0.0);

    const double factor = std::pow(static_cast<double>(n), -1.0 / (d + 4));
    double log_h_sum = 0.0;
    for (int j = 0; j < d; ++j) {
        double mean = 0.0;
        for (int i = 0; i < n; ++i) mean += sample.at(i, j);
        mean /= n;
        double var = 0.0;
        for (int i = 0; i < n; ++i) {
            const double t = sample.at(i, j) - mean;
            var += t * t;
        }
        var /= std::max(1, n - 1);
        const double sigma = std::sqrt(var);
        k.h[j] = sigma * factor;
        if (!(k.h[j] > 1e-12)) {
            k.degenerate = true;
            return k;
        }
        log_h_sum += std::log(k.h[j]);
    }
    k.log_norm = -log_h_sum - 0.5 * d * kLog2Pi - std::log(static_cast<double>(n));
    return k;
}

double kde_log_density(const Kde& k, std::span<const double> x) { return log_density_impl(k, x); }

namespace ref {
double kde_log_density(const Kde& k, std::span<const double> x) {
    // plain sum in the linear domain; adequate for moderate dimensions and
    // used to cross-check the stabilized version
    if (static_cast<int>(x.size()) != k.data.d) throw shape_error("kde: dimension mismatch");
    if (k.degenerate) return -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (int i = 0; i < k.data.k; ++i) {
        auto row = k.data.row(i);
        double s = 0.0;
        for (int j = 0; j < k.data.d; ++j) {
            const double z = (x[j] - row[j]) / k.h[j];
            s += z * z;
        }
        acc += std::exp(-0.5 * s);
    }
    return k.log_norm + std::log(acc);
}
}  // namespace ref

std::vector<double> kde_log_density_batch(const Kde& k, const Batch& xs) {
    std::vector<double> out(xs.k);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < xs.k; ++i) out[i] = kde_log_density(k, xs.row(i));
    return out;
}

}  // namespace mfm
