#pragma once
#include <span>
#include <string>
#include <vector>

#include "mfm/batch.hpp"
#include "mfm/rng.hpp"

namespace mfm {

// Dense square matrix, row-major.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {}
    double& at(int i, int j) { return v[static_cast<size_t>(i) * cols + j]; }
    double at(int i, int j) const { return v[static_cast<size_t>(i) * cols + j]; }
    std::span<const double> row(int i) const {
        return {v.data() + static_cast<size_t>(i) * cols, static_cast<size_t>(cols)};
    }
};

enum class CostKind { SqEuclidean, L1, Cosine, WeightedSq };

struct CostFn {
    CostKind kind = CostKind::SqEuclidean;
    // WeightedSq only: d x d matrix applied to the displacement.
    Mat weight;
};

CostFn sq_euclidean_cost();
CostFn l1_cost();
CostFn cosine_cost();
CostFn weighted_sq_cost(Mat a);
// Entries i.i.d. uniform in [-1,1]; pinned by seed so an experiment config
// fully determines the matrix.
CostFn random_weighted_sq_cost(int d, Rng& rng);

std::string cost_kind_name(CostKind k);
CostKind cost_kind_from_name(const std::string& name);

double eval_cost(const CostFn& fn, std::span<const double> x0, std::span<const double> x1);

// Full k x k evaluation, C[i][j] = c(x0_i, x1_j). Parallel over rows.
Mat cost_matrix(const CostFn& fn, const Batch& x0, const Batch& x1);

namespace ref {
// Serial reference, kept for tests and the kernel benchmark.
Mat cost_matrix(const CostFn& fn, const Batch& x0, const Batch& x1);
}  // namespace ref

double mat_mean(const Mat& m);
double mat_max(const Mat& m);
double mat_median(const Mat& m);

}  // namespace mfm
