#pragma once
#include <span>
#include <string>
#include <vector>

namespace mfm {

// k points in R^d, row-major. The unit of all coupling and training work.
struct Batch {
    int k = 0;
    int d = 0;
    std::vector<double> x;  // k*d

    Batch() = default;
    Batch(int k_, int d_) : k(k_), d(d_), x(static_cast<size_t>(k_) * d_, 0.0) {}

    std::span<double> row(int i) { return {x.data() + static_cast<size_t>(i) * d, static_cast<size_t>(d)}; }
    std::span<const double> row(int i) const {
        return {x.data() + static_cast<size_t>(i) * d, static_cast<size_t>(d)};
    }
    double& at(int i, int j) { return x[static_cast<size_t>(i) * d + j]; }
    double at(int i, int j) const { return x[static_cast<size_t>(i) * d + j]; }
};

// Requires every entry finite, k >= 1, d >= 1; throws otherwise.
void validate_batch(const Batch& b, const std::string& what);

// CSV: one point per row, d comma-separated columns, '.' decimal separator,
// '\n' line endings, optional '#'-prefixed header lines. Values are written
// with 17 significant digits so a save/load round trip is bit exact.
void save_batch(const std::string& path, const Batch& b);
Batch load_batch(const std::string& path);

}  // namespace mfm
