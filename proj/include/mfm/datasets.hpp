#pragma once
#include <memory>
#include <span>
#include <string>

#include "mfm/batch.hpp"
#include "mfm/gmm.hpp"
#include "mfm/rng.hpp"

namespace mfm {

// 2D checkerboard: 4x4 unit cells tiling [-2,2]^2, cell (i,j) occupied iff
// i+j is even. Points are uniform over the 8 occupied cells.
Batch sample_checkerboard(Rng& rng, int n);
bool checkerboard_contains(double x, double y);
double checkerboard_log_density(std::span<const double> x);

// A source/target distribution the training and eval loops can draw from.
// Gmm-backed samplers also expose an analytic log density; CSV-backed ones
// resample rows with replacement and have no density.
class Sampler {
public:
    static Sampler checkerboard();
    static Sampler gmm(Gmm g);
    static Sampler csv(const std::string& path);

    Batch sample(int n, Rng& rng) const;
    int dim() const;
    bool has_density() const;
    double log_density(std::span<const double> x) const;
    const Gmm* as_gmm() const;  // null unless gmm-backed

private:
    enum class Kind { Checkerboard, GmmDist, Csv };
    Kind kind_ = Kind::Checkerboard;
    std::shared_ptr<const Gmm> gmm_;
    std::shared_ptr<const Batch> rows_;
};

}  // namespace mfm
