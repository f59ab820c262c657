#pragma once
#include "mfm/cost.hpp"

namespace mfm {

// k x k nonnegative matrix with every row and column summing to 1, i.e.
// k times the transport plan between uniform marginals. Permutation
// matrices are the 0/1 special case.
struct DoublyStochastic {
    Mat pi;
    bool converged = false;
    int iterations = 0;
    double max_violation = 0.0;  // L_inf deviation of row/col sums from 1
};

struct SinkhornOpts {
    int max_iter = 20000;
    double tol = 1e-9;      // on row/col sums of pi
    bool eps_scaling = true;  // warm start from large epsilon, halve down
};

// Log-domain Sinkhorn for min <P,C> + eps * sum P(log P - 1) over plans P
// with uniform marginals 1/k. Returns pi = k*P. Large eps recovers the
// all-1/k matrix, small eps approaches the exact assignment.
DoublyStochastic sinkhorn(const Mat& c, double epsilon, const SinkhornOpts& opts = {});

double plan_cost(const DoublyStochastic& ds, const Mat& c);  // <pi/k, C>

}  // namespace mfm
