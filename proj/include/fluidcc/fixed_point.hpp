#pragma once

#include "fluidcc/model.hpp"

namespace fluidcc {

// Steady state of the fluid model. W_max equals W at the fixed point, so a
// single window value is stored.
struct FixedPoint {
    double w_hat = 0.0;  // packets
    double s_hat = 0.0;  // seconds
    double p_hat = 0.0;  // loss probability

    FlowState state() const noexcept { return FlowState{w_hat, s_hat}; }
};

struct CubicFixedPointSolution {
    FixedPoint point;
    double excess = 0.0;    // W_hat - C tau, kept separately for accuracy
    double residual = 0.0;  // |W (W - C tau)^3 - tau^3 c / b| / (tau^3 c / b)
    int iterations = 0;
    // Whether a scan of the bracket saw exactly one sign change of the
    // fixed-point equation.
    bool single_sign_change = false;
};

// Solves W (W - C tau)^3 = tau^3 c / b for the root with W > C tau using
// bracketed bisection refined by Newton steps. C may be zero here (the
// equation then collapses to W^4 = tau^3 c / b); tau, b and c must be valid.
CubicFixedPointSolution solve_cubic_fixed_point(const SystemParams& params, double tol = 1e-12);

FixedPoint cubic_fixed_point(const SystemParams& params, double tol = 1e-12);

// W = sqrt(2 / p).
double reno_fixed_point(double p_hat);

// W = (tau^3 c / (p^3 b))^(1/4).
double cubic_w_of_p(double p_hat, const SystemParams& params);

// Full Reno steady state: W^2 (1 - C tau / W) = 2, s = tau W / 2.
FixedPoint reno_fixed_point_state(const SystemParams& params);

}  // namespace fluidcc
