#include "mfm/ode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mfm/error.hpp"
#include "mfm/parallel.hpp"

namespace mfm {

namespace {

// Dormand-Prince 5(4) tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// embedded 4th-order weights
constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                 e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

struct Eval {
    const Field& f;
    long nfe = 0;
    void operator()(double t, std::span<const double> x, std::span<double> dx) {
        f(t, x, dx);
        ++nfe;
        for (double v : dx)
            if (!std::isfinite(v)) throw numerical_error("integrate: non-finite field value");
    }
};

double error_norm(std::span<const double> err, std::span<const double> y0,
                  std::span<const double> y1, double atol, double rtol) {
    double acc = 0.0;
    for (size_t i = 0; i < err.size(); ++i) {
        const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = err[i] / sc;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
}

void record_point(Trajectory& tr, bool record, double t, std::span<const double> y) {
    if (!record) return;
    tr.times.push_back(t);
    tr.states.emplace_back(y.begin(), y.end());
}

Trajectory integrate_fixed(Eval& eval, std::span<const double> x0, const IntegrateOpts& opts) {
    const int stages = opts.method == OdeMethod::Euler ? 1 : opts.method == OdeMethod::Midpoint ? 2 : 4;
    if (opts.nfe_budget < stages)
        throw usage_error("integrate: nfe_budget must be at least the stage count");
    if (opts.nfe_budget % stages != 0)
        throw usage_error("integrate: nfe_budget must be divisible by the stage count");
    const int steps = opts.nfe_budget / stages;
    const double h = (opts.t1 - opts.t0) / steps;
    const size_t d = x0.size();

    Trajectory tr;
    std::vector<double> y(x0.begin(), x0.end());
    std::vector<double> k1(d), k2(d), k3(d), k4(d), tmp(d);
    record_point(tr, opts.record_trajectory, opts.t0, y);

    for (int s = 0; s < steps; ++s) {
        const double t = opts.t0 + s * h;
        switch (opts.method) {
            case OdeMethod::Euler:
                eval(t, y, k1);
                for (size_t i = 0; i < d; ++i) y[i] += h * k1[i];
                break;
            case OdeMethod::Midpoint:
                eval(t, y, k1);
                for (size_t i = 0; i < d; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
                eval(t + 0.5 * h, tmp, k2);
                for (size_t i = 0; i < d; ++i) y[i] += h * k2[i];
                break;
            case OdeMethod::RK4:
                eval(t, y, k1);
                for (size_t i = 0; i < d; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
                eval(t + 0.5 * h, tmp, k2);
                for (size_t i = 0; i < d; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
                eval(t + 0.5 * h, tmp, k3);
                for (size_t i = 0; i < d; ++i) tmp[i] = y[i] + h * k3[i];
                eval(t + h, tmp, k4);
                for (size_t i = 0; i < d; ++i)
                    y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                break;
            default:
                break;
        }
        record_point(tr, opts.record_trajectory, opts.t0 + (s + 1) * h, y);
    }
    tr.end = std::move(y);
    tr.nfe = eval.nfe;
    return tr;
}

Trajectory integrate_dopri(Eval& eval, std::span<const double> x0, const IntegrateOpts& opts) {
    const size_t d = x0.size();
    const double dir = opts.t1 >= opts.t0 ? 1.0 : -1.0;
    const double span = std::abs(opts.t1 - opts.t0);

    Trajectory tr;
    std::vector<double> y(x0.begin(), x0.end());
    record_point(tr, opts.record_trajectory, opts.t0, y);
    if (span == 0.0) {
        tr.end = std::move(y);
        return tr;
    }

    std::vector<double> f1(d), f2(d), f3(d), f4(d), f5(d), f6(d), f7(d);
    std::vector<double> ynew(d), err(d), tmp(d);

    double t = opts.t0;
    eval(t, y, f1);

    // automatic initial step (one extra trial evaluation)
    double h;
    {
        double d0 = 0.0, d1 = 0.0;
        for (size_t i = 0; i < d; ++i) {
            const double sc = opts.atol + opts.rtol * std::abs(y[i]);
            d0 += (y[i] / sc) * (y[i] / sc);
            d1 += (f1[i] / sc) * (f1[i] / sc);
        }
        d0 = std::sqrt(d0 / d);
        d1 = std::sqrt(d1 / d);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, span);
        for (size_t i = 0; i < d; ++i) tmp[i] = y[i] + dir * h0 * f1[i];
        eval(t + dir * h0, tmp, f2);
        double d2 = 0.0;
        for (size_t i = 0; i < d; ++i) {
            const double sc = opts.atol + opts.rtol * std::abs(y[i]);
            d2 += ((f2[i] - f1[i]) / sc) * ((f2[i] - f1[i]) / sc);
        }
        d2 = std::sqrt(d2 / d) / h0;
        const double dm = std::max(d1, d2);
        const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
        h = std::min({100.0 * h0, h1, span});
    }

    double err_prev = 1.0;
    const double safety = 0.9;
    // stop once the remaining span is below rounding noise
    while (dir * (opts.t1 - t) > 1e-13 * span) {
        h = std::min(h, std::abs(opts.t1 - t));
        if (h < 1e-12) throw numerical_error("integrate: adaptive step underflow");
        const double hs = dir * h;

        for (size_t i = 0; i < d; ++i) tmp[i] = y[i] + hs * a21 * f1[i];
        eval(t + c2 * hs, tmp, f2);
        for (size_t i = 0; i < d; ++i) tmp[i] = y[i] + hs * (a31 * f1[i] + a32 * f2[i]);
        eval(t + c3 * hs, tmp, f3);
        for (size_t i = 0; i < d; ++i)
            tmp[i] = y[i] + hs * (a41 * f1[i] + a42 * f2[i] + a43 * f3[i]);
        eval(t + c4 * hs, tmp, f4);
        for (size_t i = 0; i < d; ++i)
            tmp[i] = y[i] + hs * (a51 * f1[i] + a52 * f2[i] + a53 * f3[i] + a54 * f4[i]);
        eval(t + c5 * hs, tmp, f5);
        for (size_t i = 0; i < d; ++i)
            tmp[i] = y[i] + hs * (a61 * f1[i] + a62 * f2[i] + a63 * f3[i] + a64 * f4[i] + a65 * f5[i]);
        eval(t + hs, tmp, f6);
        for (size_t i = 0; i < d; ++i)
            ynew[i] = y[i] + hs * (b1 * f1[i] + b3 * f3[i] + b4 * f4[i] + b5 * f5[i] + b6 * f6[i]);
        eval(t + hs, ynew, f7);
        for (size_t i = 0; i < d; ++i) {
            const double y4 = y[i] + hs * (e1 * f1[i] + e3 * f3[i] + e4 * f4[i] + e5 * f5[i] +
                                           e6 * f6[i] + e7 * f7[i]);
            err[i] = ynew[i] - y4;
        }

        const double en = error_norm(err, y, ynew, opts.atol, opts.rtol);
        if (en <= 1.0) {
            t += hs;
            y.swap(ynew);
            f1.swap(f7);  // first-same-as-last
            record_point(tr, opts.record_trajectory, t, y);
            // PI controller
            const double fac =
                safety * std::pow(en > 0.0 ? en : 1e-10, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
            h *= std::clamp(fac, 0.2, 5.0);
            err_prev = std::max(en, 1e-10);
        } else {
            h *= std::max(0.2, safety * std::pow(en, -0.2));
        }
    }
    tr.end = std::move(y);
    tr.nfe = eval.nfe;
    return tr;
}

}  // namespace

Trajectory integrate(const Field& field, std::span<const double> x0, const IntegrateOpts& opts) {
    for (double v : x0)
        if (!std::isfinite(v)) throw numerical_error("integrate: non-finite initial state");
    Eval eval{field};
    Trajectory tr = opts.method == OdeMethod::Adaptive54 ? integrate_dopri(eval, x0, opts)
                                                         : integrate_fixed(eval, x0, opts);
    tr.nfe = eval.nfe;
    return tr;
}

LogdetResult integrate_with_logdet(const FieldWithDiv& field, std::span<const double> x,
                                   bool forward, const IntegrateOpts& opts) {
    const size_t d = x.size();
    // augmented state [x, l] with dl/dt = -div
    Field aug = [&field, d](double t, std::span<const double> s, std::span<double> ds) {
        const double div = field(t, s.subspan(0, d), ds.subspan(0, d));
        ds[d] = -div;
    };
    std::vector<double> s0(d + 1, 0.0);
    std::copy(x.begin(), x.end(), s0.begin());

    IntegrateOpts o = opts;
    if (forward) {
        o.t0 = opts.t0;
        o.t1 = opts.t1;
    } else {
        o.t0 = opts.t1;
        o.t1 = opts.t0;
    }
    o.record_trajectory = false;
    const Trajectory tr = integrate(aug, s0, o);

    LogdetResult res;
    res.endpoint.assign(tr.end.begin(), tr.end.begin() + d);
    // l accumulates -int div dt in integration direction; flip for backward
    // so the reported value is always along increasing t
    res.delta_logp = forward ? tr.end[d] : -tr.end[d];
    res.nfe = tr.nfe;
    return res;
}

Field model_field(const Mlp& m) {
    return [&m](double t, std::span<const double> x, std::span<double> dx) {
        forward(m, x, t, dx);
    };
}

FieldWithDiv model_field_with_div(const Mlp& m) {
    if (m.spec.dim > 8)
        throw usage_error("exact divergence supported only for d <= 8");
    return [&m](double t, std::span<const double> x, std::span<double> dx) {
        forward(m, x, t, dx);
        return divergence(m, x, t);
    };
}

double model_log_density(const Mlp& m, const Sampler& base, std::span<const double> x,
                         const IntegrateOpts& opts) {
    if (!base.has_density()) throw usage_error("model_log_density: base needs an analytic density");
    const FieldWithDiv f = model_field_with_div(m);
    const LogdetResult res = integrate_with_logdet(f, x, /*forward=*/false, opts);
    return base.log_density(res.endpoint) + res.delta_logp;
}

Batch integrate_batch(const Mlp& m, const Batch& x0s, const IntegrateOpts& opts) {
    Batch out(x0s.k, x0s.d);
    const Field f = model_field(m);
    ParallelGuard guard;
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < x0s.k; ++i) {
        guard.run([&, i] {
            const Trajectory tr = integrate(f, x0s.row(i), opts);
            std::copy(tr.end.begin(), tr.end.end(), out.row(i).begin());
        });
    }
    guard.rethrow_if_any();
    return out;
}

void save_trajectory_csv(const std::string& path, const Trajectory& tr) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw io_error("cannot open '" + path + "' for writing");
    std::fprintf(f, "# t, state\n");
    for (size_t i = 0; i < tr.times.size(); ++i) {
        std::fprintf(f, "%.17g", tr.times[i]);
        for (double v : tr.states[i]) std::fprintf(f, ",%.17g", v);
        std::fprintf(f, "\n");
    }
    if (std::fclose(f) != 0) throw io_error("write failed for '" + path + "'");
}

}  // namespace mfm
