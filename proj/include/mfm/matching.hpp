#pragma once
#include <vector>

#include "mfm/assignment.hpp"
#include "mfm/cost.hpp"

namespace mfm {

// Cross-set preferences derived from a cost matrix. Lower cost means more
// preferred; ties break toward the smaller index so rankings are
// deterministic.
struct Rankings {
    int k = 0;
    std::vector<int> pref0;  // k*k: pref0[i*k + r] = target ranked r by source i
    std::vector<int> rank0;  // k*k: rank0[i*k + j] = rank of target j for source i
    std::vector<int> rank1;  // k*k: rank1[j*k + i] = rank of source i for target j

    int preferred_target(int i, int r) const { return pref0[static_cast<size_t>(i) * k + r]; }
    int source_rank_of(int i, int j) const { return rank0[static_cast<size_t>(i) * k + j]; }
    int target_rank_of(int j, int i) const { return rank1[static_cast<size_t>(j) * k + i]; }
};

Rankings rankings_from_cost(const Mat& c);

// Deferred-acceptance with sources proposing in increasing index order.
// Output has zero blocking pairs and is source-optimal among stable
// matchings.
Permutation stable_coupling(const Rankings& r);

// Same proposal loop, but an occupied target is handed over only when the
// swap lowers the combined cost of the two pairs it touches. Candidate
// costs that do not exist (a side has run out of untried targets) count as
// +inf, which resolves the comparison deterministically.
Permutation heuristic_coupling(const Rankings& r, const Mat& c);

// Pairs (i,j) where i prefers j over sigma[i] and j prefers i over its
// assigned source.
long count_blocking_pairs(const Permutation& sigma, const Rankings& r);

}  // namespace mfm
