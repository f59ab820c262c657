#include "mfm/datasets.hpp"

#include <cmath>
#include <limits>

#include "mfm/error.hpp"

namespace mfm {

namespace {
// occupied cells (i,j) with i+j even, lexicographic; cell (i,j) covers
// [-2+i, -1+i) x [-2+j, -1+j)
constexpr int kCells[8][2] = {{0, 0}, {0, 2}, {1, 1}, {1, 3}, {2, 0}, {2, 2}, {3, 1}, {3, 3}};
}  // namespace

Batch sample_checkerboard(Rng& rng, int n) {
    if (n < 1) throw shape_error("sample_checkerboard: n must be >= 1");
    Batch out(n, 2);
    for (int i = 0; i < n; ++i) {
        const auto& cell = kCells[rng.uniform_int(8)];
        out.at(i, 0) = -2.0 + cell[0] + rng.uniform();
        out.at(i, 1) = -2.0 + cell[1] + rng.uniform();
    }
    return out;
}

bool checkerboard_contains(double x, double y) {
    if (x < -2.0 || x >= 2.0 || y < -2.0 || y >= 2.0) return false;
    const int i = static_cast<int>(std::floor(x + 2.0));
    const int j = static_cast<int>(std::floor(y + 2.0));
    return (i + j) % 2 == 0;
}

double checkerboard_log_density(std::span<const double> x) {
    if (x.size() != 2) throw shape_error("checkerboard density is 2D");
    // 8 unit cells, uniform: density 1/8 on support
    if (checkerboard_contains(x[0], x[1])) return -std::log(8.0);
    return -std::numeric_limits<double>::infinity();
}

Sampler Sampler::checkerboard() {
    Sampler s;
    s.kind_ = Kind::Checkerboard;
    return s;
}

Sampler Sampler::gmm(Gmm g) {
    validate_gmm(g);
    Sampler s;
    s.kind_ = Kind::GmmDist;
    s.gmm_ = std::make_shared<const Gmm>(std::move(g));
    return s;
}

Sampler Sampler::csv(const std::string& path) {
    Sampler s;
    s.kind_ = Kind::Csv;
    s.rows_ = std::make_shared<const Batch>(load_batch(path));
    return s;
}

Batch Sampler::sample(int n, Rng& rng) const {
    switch (kind_) {
        case Kind::Checkerboard:
            return sample_checkerboard(rng, n);
        case Kind::GmmDist:
            return sample_gmm(*gmm_, rng, n);
        case Kind::Csv: {
            if (n < 1) throw shape_error("sample: n must be >= 1");
            Batch out(n, rows_->d);
            for (int i = 0; i < n; ++i) {
                auto src = rows_->row(static_cast<int>(rng.uniform_int(rows_->k)));
                auto dst = out.row(i);
                for (int j = 0; j < rows_->d; ++j) dst[j] = src[j];
            }
            return out;
        }
    }
    throw numerical_error("sampler: bad kind");
}

int Sampler::dim() const {
    switch (kind_) {
        case Kind::Checkerboard: return 2;
        case Kind::GmmDist: return gmm_->dim;
        case Kind::Csv: return rows_->d;
    }
    return 0;
}

bool Sampler::has_density() const { return kind_ != Kind::Csv; }

double Sampler::log_density(std::span<const double> x) const {
    switch (kind_) {
        case Kind::Checkerboard: return checkerboard_log_density(x);
        case Kind::GmmDist: return gmm_log_density(*gmm_, x);
        case Kind::Csv: break;
    }
    throw domain_error("sampler: no analytic density for csv datasets");
}

const Gmm* Sampler::as_gmm() const { return kind_ == Kind::GmmDist ? gmm_.get() : nullptr; }

}  // namespace mfm
