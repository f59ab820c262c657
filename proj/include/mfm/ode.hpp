#pragma once
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mfm/batch.hpp"
#include "mfm/datasets.hpp"
#include "mfm/net.hpp"

namespace mfm {

enum class OdeMethod { Euler, Midpoint, RK4, Adaptive54 };

struct IntegrateOpts {
    OdeMethod method = OdeMethod::Adaptive54;
    // fixed-step methods: total vector-field evaluations; steps are
    // nfe_budget / stage count (Euler 1, Midpoint 2, RK4 4)
    int nfe_budget = 0;
    double atol = 1e-5;
    double rtol = 1e-5;
    double t0 = 0.0;
    double t1 = 1.0;
    bool record_trajectory = false;
};

struct Trajectory {
    std::vector<double> times;                // filled when recording
    std::vector<std::vector<double>> states;  // filled when recording
    std::vector<double> end;
    long nfe = 0;  // exact evaluation count
};

using Field = std::function<void(double t, std::span<const double> x, std::span<double> dx)>;

// Terminal state of dx/dt = field(t,x) from opts.t0 to opts.t1. Adaptive54
// is a Dormand-Prince 5(4) pair with PI step control; its NFE audit is
// 2 evaluations for the automatic initial step plus 6 per attempted step.
Trajectory integrate(const Field& field, std::span<const double> x0, const IntegrateOpts& opts);

// Joint integration of the state and the accumulated -div term of the
// instantaneous change of variables. delta_logp is -int_0^1 div field dt
// along the trajectory through x regardless of direction; direction picks
// which end of the path x is (forward: x at t=0, backward: x at t=1).
using FieldWithDiv =
    std::function<double(double t, std::span<const double> x, std::span<double> dx)>;

struct LogdetResult {
    std::vector<double> endpoint;
    double delta_logp = 0.0;
    long nfe = 0;
};
LogdetResult integrate_with_logdet(const FieldWithDiv& field, std::span<const double> x,
                                   bool forward, const IntegrateOpts& opts);

Field model_field(const Mlp& m);
FieldWithDiv model_field_with_div(const Mlp& m);  // exact divergence, d <= 8

// log density of the model pushforward of `base` at x, by backward
// integration to t=0.
double model_log_density(const Mlp& m, const Sampler& base, std::span<const double> x,
                         const IntegrateOpts& opts);

// Rows of x0s integrated independently in parallel.
Batch integrate_batch(const Mlp& m, const Batch& x0s, const IntegrateOpts& opts);

void save_trajectory_csv(const std::string& path, const Trajectory& tr);

}  // namespace mfm
