#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "fluidcc/dde.hpp"
#include "fluidcc/fixed_point.hpp"
#include "fluidcc/protocols.hpp"

namespace fluidcc {

// Coefficients of the cubic truncation of the shifted CUBIC system:
//   dx1/dt ~ -alpha x1^3 + beta x1^2 x2 - gamma x1 x2^2 + delta x2^3
struct ExpansionCoeffs {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double delta = 0.0;
};

ExpansionCoeffs expansion_coeffs(const FixedPoint& fp, const SystemParams& params);

// Symmetric 3x3 matrix of the quartic form bounding dV/dt, acting on
// z = (x1^2, sqrt(2) x1 x2, x2^2). Block diagonal: a 2x2 block and d4 / s_hat.
struct QtildeMatrix {
    std::array<std::array<double, 3>, 3> m{};
    double lambda_min = 0.0;

    double quadratic_form(const std::array<double, 3>& z) const noexcept;
};

// Overrides for the free constants; zero means "use the default".
struct LyapunovOptions {
    double eps1 = 0.0;          // default 0.5 * min(s_hat / 6c, tau / 4 s_hat)
    double k_margin = 0.0;      // default lambda_min / 2
    double razumikhin_p = 0.0;  // default 1.01
};

struct LyapunovParams {
    double d1 = 0.0;  // s_hat / c
    double d4 = 0.0;  // tau / s_hat
    double s_hat = 0.0;
    double eps0 = 0.0;
    double eps1 = 0.0;
    double k_margin = 0.0;
    double razumikhin_p = 1.01;
    double lambda_min = 0.0;
};

// Builds the constants and checks their invariants (throws DomainError).
LyapunovParams lyapunov_params(const FixedPoint& fp, const SystemParams& params,
                               const LyapunovOptions& options = {});

// Throws DomainError if the result is not positive definite.
QtildeMatrix qtilde(const ExpansionCoeffs& coeffs, const LyapunovParams& lp, const FixedPoint& fp);

// Sylvester's criterion on the leading principal minors.
bool positive_definite_by_minors(const QtildeMatrix& q) noexcept;

// V = d1 / 2 x1^2 + d4 / 4 x2^4
double lyapunov_v(const ShiftedState& x, const LyapunovParams& lp) noexcept;

// dV/dt = d1 x1 dx1 + d4 x2^3 dx2
double lyapunov_vdot(const ShiftedState& x, const ShiftedDerivative& dx,
                     const LyapunovParams& lp) noexcept;

struct VdotSample {
    double t = 0.0;
    double norm_x = 0.0;
    double v = 0.0;
    double vdot = 0.0;
    // Sampled sup of V over the last delay interval is at most p V(t).
    bool razumikhin_holds = false;
    // vdot <= -(lambda_min - K) |x|^4
    bool decay_bound_holds = false;
};

// dV/dt along a CUBIC trajectory, evaluated from the exact shifted
// right-hand side. The recording interval must divide tau.
std::vector<VdotSample> vdot_along(const Trajectory& traj, const InitialHistory& init,
                                   const FixedPoint& fp, const LyapunovParams& lp);

// |x|^4 <= 1 / (eps1 (lambda_min - K) / eps0^2 (t - t0) + eps1 / V(t0))
double convergence_bound(double t, double v0, const LyapunovParams& lp, double lambda_min,
                         double t0 = 0.0);

// Initial radius eps^2 sqrt(eps1 / eps0) that keeps |x| below eps.
double basin_delta(double epsilon, const LyapunovParams& lp);

// Writes t,norm_x,V,Vdot,bound with the bound anchored at V of the first sample.
void write_convergence_csv(std::ostream& os, const std::vector<VdotSample>& samples,
                           const LyapunovParams& lp);

}  // namespace fluidcc
