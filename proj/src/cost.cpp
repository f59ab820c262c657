#include "mfm/cost.hpp"

#include <algorithm>
#include <cmath>

#include "mfm/error.hpp"
#include "mfm/parallel.hpp"

namespace mfm {

CostFn sq_euclidean_cost() { return CostFn{CostKind::SqEuclidean, {}}; }
CostFn l1_cost() { return CostFn{CostKind::L1, {}}; }
CostFn cosine_cost() { return CostFn{CostKind::Cosine, {}}; }

CostFn weighted_sq_cost(Mat a) {
    if (a.rows != a.cols || a.rows < 1) throw shape_error("weighted cost: matrix must be square");
    for (double v : a.v)
        if (!std::isfinite(v)) throw numerical_error("weighted cost: non-finite matrix entry");
    return CostFn{CostKind::WeightedSq, std::move(a)};
}

CostFn random_weighted_sq_cost(int d, Rng& rng) {
    Mat a(d, d);
    for (double& v : a.v) v = rng.uniform(-1.0, 1.0);
    return weighted_sq_cost(std::move(a));
}

std::string cost_kind_name(CostKind k) {
    switch (k) {
        case CostKind::SqEuclidean: return "sq_euclidean";
        case CostKind::L1: return "l1";
        case CostKind::Cosine: return "cosine";
        case CostKind::WeightedSq: return "weighted_sq";
    }
    return "?";
}

CostKind cost_kind_from_name(const std::string& name) {
    if (name == "sq_euclidean") return CostKind::SqEuclidean;
    if (name == "l1") return CostKind::L1;
    if (name == "cosine") return CostKind::Cosine;
    if (name == "weighted_sq") return CostKind::WeightedSq;
    throw usage_error("unknown cost kind '" + name + "'");
}

double eval_cost(const CostFn& fn, std::span<const double> x0, std::span<const double> x1) {
    if (x0.size() != x1.size()) throw shape_error("eval_cost: dimension mismatch");
    const int d = static_cast<int>(x0.size());
    switch (fn.kind) {
        case CostKind::SqEuclidean: {
            double s = 0.0;
            for (int j = 0; j < d; ++j) {
                const double t = x1[j] - x0[j];
                s += t * t;
            }
            return s;
        }
        case CostKind::L1: {
            double s = 0.0;
            for (int j = 0; j < d; ++j) s += std::abs(x1[j] - x0[j]);
            return s;
        }
        case CostKind::Cosine: {
            double n0 = 0.0, n1 = 0.0, dot = 0.0;
            for (int j = 0; j < d; ++j) {
                n0 += x0[j] * x0[j];
                n1 += x1[j] * x1[j];
                dot += x0[j] * x1[j];
            }
            n0 = std::sqrt(n0);
            n1 = std::sqrt(n1);
            if (n0 < 1e-12 || n1 < 1e-12)
                throw domain_error("cosine cost: zero-norm input vector");
            return 1.0 - dot / (n0 * n1);
        }
        case CostKind::WeightedSq: {
            if (fn.weight.rows != d) throw shape_error("weighted cost: matrix dim mismatch");
            double s = 0.0;
            for (int i = 0; i < d; ++i) {
                double row = 0.0;
                for (int j = 0; j < d; ++j) row += fn.weight.at(i, j) * (x1[j] - x0[j]);
                s += row * row;
            }
            return s;
        }
    }
    throw numerical_error("eval_cost: bad kind");
}

Mat cost_matrix(const CostFn& fn, const Batch& x0, const Batch& x1) {
    if (x0.k != x1.k) throw shape_error("cost_matrix: batches must have equal k");
    if (x0.d != x1.d) throw shape_error("cost_matrix: batches must have equal d");
    const int k = x0.k;
    Mat c(k, k);
    ParallelGuard guard;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < k; ++i) {
        guard.run([&, i] {
            auto a = x0.row(i);
            for (int j = 0; j < k; ++j) c.at(i, j) = eval_cost(fn, a, x1.row(j));
        });
    }
    guard.rethrow_if_any();
    return c;
}

namespace ref {
Mat cost_matrix(const CostFn& fn, const Batch& x0, const Batch& x1) {
    if (x0.k != x1.k) throw shape_error("cost_matrix: batches must have equal k");
    if (x0.d != x1.d) throw shape_error("cost_matrix: batches must have equal d");
    const int k = x0.k;
    Mat c(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) c.at(i, j) = eval_cost(fn, x0.row(i), x1.row(j));
    return c;
}
}  // namespace ref

double mat_mean(const Mat& m) {
    double s = 0.0;
    for (double v : m.v) s += v;
    return s / static_cast<double>(m.v.size());
}

double mat_max(const Mat& m) { return *std::max_element(m.v.begin(), m.v.end()); }

double mat_median(const Mat& m) {
    std::vector<double> tmp = m.v;
    const size_t mid = tmp.size() / 2;
    std::nth_element(tmp.begin(), tmp.begin() + mid, tmp.end());
    return tmp[mid];
}

}  // namespace mfm
