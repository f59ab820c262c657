#include "mfm/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "mfm/error.hpp"

namespace mfm {

Rankings rankings_from_cost(const Mat& c) {
    if (c.rows != c.cols || c.rows < 1) throw shape_error("rankings: matrix must be square");
    for (double v : c.v)
        if (!std::isfinite(v)) throw numerical_error("rankings: non-finite cost entry");
    const int k = c.rows;
    Rankings r;
    r.k = k;
    r.pref0.resize(static_cast<size_t>(k) * k);
    r.rank0.resize(static_cast<size_t>(k) * k);
    r.rank1.resize(static_cast<size_t>(k) * k);

#pragma omp parallel for schedule(static)
    for (int i = 0; i < k; ++i) {
        int* pref = r.pref0.data() + static_cast<size_t>(i) * k;
        std::iota(pref, pref + k, 0);
        std::sort(pref, pref + k, [&](int a, int b) {
            const double ca = c.at(i, a), cb = c.at(i, b);
            return ca < cb || (ca == cb && a < b);
        });
        for (int rank = 0; rank < k; ++rank) r.rank0[static_cast<size_t>(i) * k + pref[rank]] = rank;
    }

#pragma omp parallel for schedule(static)
    for (int j = 0; j < k; ++j) {
        std::vector<int> order(k);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double ca = c.at(a, j), cb = c.at(b, j);
            return ca < cb || (ca == cb && a < b);
        });
        for (int rank = 0; rank < k; ++rank) r.rank1[static_cast<size_t>(j) * k + order[rank]] = rank;
    }
    return r;
}

namespace {

// lowest-index-first pool of unmatched sources
using MinHeap = std::priority_queue<int, std::vector<int>, std::greater<int>>;

}  // namespace

Permutation stable_coupling(const Rankings& r) {
    const int k = r.k;
    Permutation sigma(k, -1);
    std::vector<int> matched_source(k, -1);  // target -> source
    std::vector<int> next_try(k, 0);

    MinHeap unmatched;
    for (int i = 0; i < k; ++i) unmatched.push(i);

    while (!unmatched.empty()) {
        const int i = unmatched.top();
        unmatched.pop();
        if (next_try[i] >= k) throw numerical_error("stable_coupling: preference list exhausted");
        const int j = r.preferred_target(i, next_try[i]++);
        const int holder = matched_source[j];
        if (holder < 0) {
            sigma[i] = j;
            matched_source[j] = i;
        } else if (r.target_rank_of(j, i) < r.target_rank_of(j, holder)) {
            sigma[holder] = -1;
            unmatched.push(holder);
            sigma[i] = j;
            matched_source[j] = i;
        } else {
            unmatched.push(i);  // rejected, will try its next preference
        }
    }
    return sigma;
}

Permutation heuristic_coupling(const Rankings& r, const Mat& c) {
    if (c.rows != r.k || c.cols != r.k) throw shape_error("heuristic_coupling: shape mismatch");
    const int k = r.k;
    const double inf = std::numeric_limits<double>::infinity();
    Permutation sigma(k, -1);
    std::vector<int> matched_source(k, -1);
    std::vector<int> next_try(k, 0);

    MinHeap unmatched;
    for (int i = 0; i < k; ++i) unmatched.push(i);

    long proposals = 0;
    const long proposal_cap = static_cast<long>(k) * k;
    while (!unmatched.empty()) {
        if (++proposals > proposal_cap)
            throw numerical_error("heuristic_coupling: proposal bound exceeded");
        const int i = unmatched.top();
        unmatched.pop();
        if (next_try[i] >= k) throw numerical_error("heuristic_coupling: preference list exhausted");
        const int j = r.preferred_target(i, next_try[i]++);
        const int holder = matched_source[j];
        if (holder < 0) {
            sigma[i] = j;
            matched_source[j] = i;
            continue;
        }
        // candidate replacements: holder's next untried target, and this
        // source's next untried target after j
        const double c_holder_next =
            next_try[holder] < k ? c.at(holder, r.preferred_target(holder, next_try[holder])) : inf;
        const double c_i_next = next_try[i] < k ? c.at(i, r.preferred_target(i, next_try[i])) : inf;
        if (c.at(i, j) + c_holder_next < c_i_next + c.at(holder, j)) {
            sigma[holder] = -1;
            unmatched.push(holder);
            sigma[i] = j;
            matched_source[j] = i;
        } else {
            unmatched.push(i);
        }
    }
    return sigma;
}

long count_blocking_pairs(const Permutation& sigma, const Rankings& r) {
    const int k = r.k;
    if (static_cast<int>(sigma.size()) != k) throw shape_error("count_blocking_pairs: size mismatch");
    if (!is_permutation(sigma)) throw usage_error("count_blocking_pairs: sigma is not a bijection");
    std::vector<int> inverse(k, -1);
    for (int i = 0; i < k; ++i) inverse[sigma[i]] = i;

    long count = 0;
#pragma omp parallel for schedule(static) reduction(+ : count)
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            if (j == sigma[i]) continue;
            if (r.source_rank_of(i, j) < r.source_rank_of(i, sigma[i]) &&
                r.target_rank_of(j, i) < r.target_rank_of(j, inverse[j]))
                ++count;
        }
    }
    return count;
}

}  // namespace mfm
