#pragma once
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "mfm/error.hpp"

namespace mfm::ad {

// Reverse-mode tape over batch matrices. Values are (rows x cols) buffers;
// parameters live in one external flat vector and gradients accumulate into
// a matching flat buffer. Backward kernels write each output entry with a
// serial inner sum, so results do not depend on the OpenMP thread count.
class Tape {
public:
    Tape(std::span<const double> theta, std::span<double> grad) : theta_(theta), grad_(grad) {}

    struct Buf {
        int rows = 0, cols = 0;
        std::vector<double> val;
        std::vector<double> adj;
    };

    int constant(int rows, int cols, const double* data) {
        const int id = alloc(rows, cols);
        std::copy(data, data + static_cast<size_t>(rows) * cols, bufs_[id].val.begin());
        return id;
    }

    // View of a parameter block as a 1 x count row; adjoint flows to grad.
    int param_row(int off, int count) {
        check_param(off, count);
        const int id = alloc(1, count);
        std::copy(theta_.begin() + off, theta_.begin() + off + count, bufs_[id].val.begin());
        ops_.push_back([this, id, off, count] {
            for (int i = 0; i < count; ++i) grad_[off + i] += bufs_[id].adj[i];
        });
        return id;
    }

    // Y = X W^T + b with W a (out x in) parameter block at w_off and b a
    // parameter vector at b_off.
    int affine(int x, int w_off, int b_off, int in_dim, int out_dim) {
        const Buf& bx = bufs_[x];
        if (bx.cols != in_dim) throw shape_error("tape affine: input width mismatch");
        check_param(w_off, in_dim * out_dim);
        check_param(b_off, out_dim);
        const int rows = bx.rows;
        const int id = alloc(rows, out_dim);
        const double* W = theta_.data() + w_off;
        const double* b = theta_.data() + b_off;
        {
            Buf& by = bufs_[id];
#pragma omp parallel for schedule(static) if (rows > 15)
            for (int r = 0; r < rows; ++r) {
                const double* xr = bx.val.data() + static_cast<size_t>(r) * in_dim;
                double* yr = by.val.data() + static_cast<size_t>(r) * out_dim;
                for (int o = 0; o < out_dim; ++o) {
                    const double* wo = W + static_cast<size_t>(o) * in_dim;
                    double acc = b[o];
                    for (int i = 0; i < in_dim; ++i) acc += xr[i] * wo[i];
                    yr[o] = acc;
                }
            }
        }
        ops_.push_back([this, x, id, w_off, b_off, in_dim, out_dim] {
            Buf& bx2 = bufs_[x];
            const Buf& by = bufs_[id];
            const int rows2 = bx2.rows;
            const double* W2 = theta_.data() + w_off;
            // dX = dY W
#pragma omp parallel for schedule(static) if (rows2 > 15)
            for (int r = 0; r < rows2; ++r) {
                const double* ar = by.adj.data() + static_cast<size_t>(r) * out_dim;
                double* xr = bx2.adj.data() + static_cast<size_t>(r) * in_dim;
                for (int i = 0; i < in_dim; ++i) {
                    double acc = 0.0;
                    for (int o = 0; o < out_dim; ++o) acc += ar[o] * W2[static_cast<size_t>(o) * in_dim + i];
                    xr[i] += acc;
                }
            }
            // dW[o][i] = sum_r dY[r][o] X[r][i]; db[o] = sum_r dY[r][o]
            double* gw = grad_.data() + w_off;
            double* gb = grad_.data() + b_off;
#pragma omp parallel for schedule(static) if (out_dim > 15)
            for (int o = 0; o < out_dim; ++o) {
                for (int i = 0; i < in_dim; ++i) {
                    double acc = 0.0;
                    for (int r = 0; r < rows2; ++r)
                        acc += by.adj[static_cast<size_t>(r) * out_dim + o] *
                               bx2.val[static_cast<size_t>(r) * in_dim + i];
                    gw[static_cast<size_t>(o) * in_dim + i] += acc;
                }
                double accb = 0.0;
                for (int r = 0; r < rows2; ++r) accb += by.adj[static_cast<size_t>(r) * out_dim + o];
                gb[o] += accb;
            }
        });
        return id;
    }

    int swish(int x) {
        const Buf& bx = bufs_[x];
        const int id = alloc(bx.rows, bx.cols);
        Buf& by = bufs_[id];
        const size_t n = by.val.size();
#pragma omp parallel for schedule(static) if (n > 255)
        for (size_t i = 0; i < n; ++i) {
            const double v = bx.val[i];
            by.val[i] = v / (1.0 + std::exp(-v));
        }
        ops_.push_back([this, x, id] {
            Buf& bx2 = bufs_[x];
            const Buf& by2 = bufs_[id];
            const size_t n2 = by2.val.size();
#pragma omp parallel for schedule(static) if (n2 > 255)
            for (size_t i = 0; i < n2; ++i) {
                const double v = bx2.val[i];
                const double s = 1.0 / (1.0 + std::exp(-v));
                bx2.adj[i] += by2.adj[i] * (s * (1.0 + v * (1.0 - s)));
            }
        });
        return id;
    }

    int sub(int a, int b) {
        const Buf& ba = bufs_[a];
        const Buf& bb = bufs_[b];
        if (ba.rows != bb.rows || ba.cols != bb.cols) throw shape_error("tape sub: shape mismatch");
        const int id = alloc(ba.rows, ba.cols);
        Buf& bc = bufs_[id];
        for (size_t i = 0; i < bc.val.size(); ++i) bc.val[i] = ba.val[i] - bb.val[i];
        ops_.push_back([this, a, b, id] {
            Buf& ba2 = bufs_[a];
            Buf& bb2 = bufs_[b];
            const Buf& bc2 = bufs_[id];
            for (size_t i = 0; i < bc2.val.size(); ++i) {
                ba2.adj[i] += bc2.adj[i];
                bb2.adj[i] -= bc2.adj[i];
            }
        });
        return id;
    }

    // (1/rows) sum_r ||row_r||^2, a 1x1 buffer.
    int mean_row_sqnorm(int x) {
        const Buf& bx = bufs_[x];
        const int id = alloc(1, 1);
        double acc = 0.0;
        for (double v : bx.val) acc += v * v;
        bufs_[id].val[0] = acc / bx.rows;
        ops_.push_back([this, x, id] {
            Buf& bx2 = bufs_[x];
            const double seed = bufs_[id].adj[0] * 2.0 / bx2.rows;
            const size_t n = bx2.val.size();
#pragma omp parallel for schedule(static) if (n > 255)
            for (size_t i = 0; i < n; ++i) bx2.adj[i] += seed * bx2.val[i];
        });
        return id;
    }

    // sum of squares of all entries, a 1x1 buffer.
    int sum_sq(int x) {
        const Buf& bx = bufs_[x];
        const int id = alloc(1, 1);
        double acc = 0.0;
        for (double v : bx.val) acc += v * v;
        bufs_[id].val[0] = acc;
        ops_.push_back([this, x, id] {
            Buf& bx2 = bufs_[x];
            const double seed = bufs_[id].adj[0] * 2.0;
            for (size_t i = 0; i < bx2.val.size(); ++i) bx2.adj[i] += seed * bx2.val[i];
        });
        return id;
    }

    double value(int id) const { return bufs_[id].val[0]; }
    const Buf& buf(int id) const { return bufs_[id]; }

    // Seeds d(loss)/d(loss)=1 and replays the tape in reverse, accumulating
    // parameter adjoints into the external grad buffer.
    void backward(int loss_id) {
        const Buf& l = bufs_[loss_id];
        if (l.rows != 1 || l.cols != 1) throw shape_error("tape backward: loss must be scalar");
        bufs_[loss_id].adj[0] = 1.0;
        for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
    }

private:
    int alloc(int rows, int cols) {
        Buf b;
        b.rows = rows;
        b.cols = cols;
        b.val.assign(static_cast<size_t>(rows) * cols, 0.0);
        b.adj.assign(static_cast<size_t>(rows) * cols, 0.0);
        bufs_.push_back(std::move(b));
        return static_cast<int>(bufs_.size()) - 1;
    }

    void check_param(int off, int count) const {
        if (off < 0 || off + count > static_cast<int>(theta_.size()))
            throw shape_error("tape: parameter block out of range");
    }

    std::span<const double> theta_;
    std::span<double> grad_;
    std::vector<Buf> bufs_;
    std::vector<std::function<void()>> ops_;
};

}  // namespace mfm::ad
