#pragma once
#include <vector>

#include "mfm/cost.hpp"

namespace mfm {

// sigma[i] = assigned column for row i; a bijection on {0..k-1}.
using Permutation = std::vector<int>;

bool is_permutation(const Permutation& sigma);

struct AssignResult {
    Permutation sigma;
    double cost = 0.0;
};

// Exhaustive minimum over all k! permutations, ties broken by
// lexicographically smallest sigma. Test oracle; rejects k > 8.
AssignResult brute_force_assignment(const Mat& c);

// Jonker-Volgenant shortest augmenting path, O(k^3). Exact minimum.
AssignResult solve_exact_assignment(const Mat& c);

double assignment_cost(const Mat& c, const Permutation& sigma);

}  // namespace mfm
