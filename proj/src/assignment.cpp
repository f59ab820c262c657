#include "mfm/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mfm/error.hpp"

namespace mfm {

bool is_permutation(const Permutation& sigma) {
    const int k = static_cast<int>(sigma.size());
    std::vector<char> seen(k, 0);
    for (int j : sigma) {
        if (j < 0 || j >= k || seen[j]) return false;
        seen[j] = 1;
    }
    return true;
}

namespace {
void check_square_finite(const Mat& c, const char* who) {
    if (c.rows != c.cols || c.rows < 1) throw shape_error(std::string(who) + ": matrix must be square");
    for (double v : c.v)
        if (!std::isfinite(v)) throw numerical_error(std::string(who) + ": non-finite cost entry");
}
}  // namespace

AssignResult brute_force_assignment(const Mat& c) {
    check_square_finite(c, "brute_force_assignment");
    const int k = c.rows;
    if (k > 8) throw usage_error("brute_force_assignment: k > 8 not supported");

    Permutation perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    AssignResult best{perm, assignment_cost(c, perm)};
    while (std::next_permutation(perm.begin(), perm.end())) {
        const double cost = assignment_cost(c, perm);
        // strict < keeps the lexicographically smallest optimum
        if (cost < best.cost) {
            best.cost = cost;
            best.sigma = perm;
        }
    }
    return best;
}

AssignResult solve_exact_assignment(const Mat& c) {
    check_square_finite(c, "solve_exact_assignment");
    const int n = c.rows;
    const double inf = std::numeric_limits<double>::infinity();

    // 1-based potentials/links, row 0 and column 0 are sentinels
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> col_to_row(n + 1, 0), way(n + 1, 0);

    for (int i = 1; i <= n; ++i) {
        col_to_row[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = col_to_row[j0];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = c.at(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[col_to_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (col_to_row[j0] != 0);
        do {
            const int j1 = way[j0];
            col_to_row[j0] = col_to_row[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    AssignResult res;
    res.sigma.assign(n, -1);
    for (int j = 1; j <= n; ++j)
        if (col_to_row[j] > 0) res.sigma[col_to_row[j] - 1] = j - 1;
    res.cost = assignment_cost(c, res.sigma);
    return res;
}

double assignment_cost(const Mat& c, const Permutation& sigma) {
    if (static_cast<int>(sigma.size()) != c.rows) throw shape_error("assignment_cost: size mismatch");
    double s = 0.0;
    for (int i = 0; i < c.rows; ++i) s += c.at(i, sigma[i]);
    return s;
}

}  // namespace mfm
