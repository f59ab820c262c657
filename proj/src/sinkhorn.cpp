#include "mfm/sinkhorn.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "mfm/error.hpp"

namespace mfm {

namespace {

// max_j (g[j] - C[i][j]) / eps  +  log sum exp of the rest
double lse_row(const Mat& c, const std::vector<double>& g, int i, double inv_eps) {
    const int k = c.cols;
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < k; ++j) mx = std::max(mx, (g[j] - c.at(i, j)) * inv_eps);
    double acc = 0.0;
    for (int j = 0; j < k; ++j) acc += std::exp((g[j] - c.at(i, j)) * inv_eps - mx);
    return mx + std::log(acc);
}

double lse_col(const Mat& c, const std::vector<double>& f, int j, double inv_eps) {
    const int k = c.rows;
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < k; ++i) mx = std::max(mx, (f[i] - c.at(i, j)) * inv_eps);
    double acc = 0.0;
    for (int i = 0; i < k; ++i) acc += std::exp((f[i] - c.at(i, j)) * inv_eps - mx);
    return mx + std::log(acc);
}

// one full f,g sweep at a given epsilon
void sweep(const Mat& c, double eps, std::vector<double>& f, std::vector<double>& g,
           double log_marginal) {
    const int k = c.rows;
    const double inv_eps = 1.0 / eps;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < k; ++i) f[i] = eps * (log_marginal - lse_row(c, g, i, inv_eps));
#pragma omp parallel for schedule(static)
    for (int j = 0; j < k; ++j) g[j] = eps * (log_marginal - lse_col(c, f, j, inv_eps));
}

}  // namespace

DoublyStochastic sinkhorn(const Mat& c, double epsilon, const SinkhornOpts& opts) {
    if (c.rows != c.cols || c.rows < 1) throw shape_error("sinkhorn: matrix must be square");
    if (!(epsilon > 0.0)) throw domain_error("sinkhorn: epsilon must be > 0");
    for (double v : c.v)
        if (!std::isfinite(v)) throw numerical_error("sinkhorn: non-finite cost entry");

    const int k = c.rows;
    const double log_marginal = -std::log(static_cast<double>(k));  // a_i = b_j = 1/k

    std::vector<double> f(k, 0.0), g(k, 0.0);

    // epsilon scaling: run a few sweeps per level from a soft epsilon down
    // to the target, carrying the potentials
    if (opts.eps_scaling) {
        double eps0 = mat_max(c) > 0.0 ? mat_max(c) : 1.0;
        for (double e = eps0; e > epsilon; e *= 0.5) {
            sweep(c, e, f, g, log_marginal);
        }
    }

    DoublyStochastic out;
    out.pi = Mat(k, k);
    const double inv_eps = 1.0 / epsilon;

    int it = 0;
    double viol = std::numeric_limits<double>::infinity();
    for (; it < opts.max_iter; ++it) {
        sweep(c, epsilon, f, g, log_marginal);

        // pi entries: k * exp((f_i + g_j - C_ij)/eps); after the g sweep the
        // columns are exact, so convergence is the worst row-sum deviation
        viol = 0.0;
#pragma omp parallel for schedule(static) reduction(max : viol)
        for (int i = 0; i < k; ++i) {
            double rs = 0.0;
            for (int j = 0; j < k; ++j)
                rs += static_cast<double>(k) * std::exp((f[i] + g[j] - c.at(i, j)) * inv_eps);
            viol = std::max(viol, std::abs(rs - 1.0));
        }
        if (viol < opts.tol) {
            ++it;
            break;
        }
    }

#pragma omp parallel for schedule(static)
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            out.pi.at(i, j) = static_cast<double>(k) * std::exp((f[i] + g[j] - c.at(i, j)) * inv_eps);

    for (double v : out.pi.v)
        if (!std::isfinite(v)) throw numerical_error("sinkhorn: non-finite plan entry");

    out.converged = viol < opts.tol;
    out.iterations = it;
    out.max_violation = viol;
    return out;
}

double plan_cost(const DoublyStochastic& ds, const Mat& c) {
    if (ds.pi.rows != c.rows || ds.pi.cols != c.cols) throw shape_error("plan_cost: shape mismatch");
    double s = 0.0;
    for (size_t i = 0; i < c.v.size(); ++i) s += ds.pi.v[i] * c.v[i];
    return s / static_cast<double>(c.rows);
}

}  // namespace mfm
