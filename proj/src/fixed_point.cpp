#include "fluidcc/fixed_point.hpp"

#include <cmath>
#include <sstream>

#include "fluidcc/detail/root_finding.hpp"
#include "fluidcc/errors.hpp"

namespace fluidcc {

namespace {

constexpr int kMaxBracketDoublings = 60;
constexpr int kMaxIterations = 400;
constexpr int kSignScanPoints = 64;

}  // namespace

CubicFixedPointSolution solve_cubic_fixed_point(const SystemParams& params, double tol) {
    if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
    if (!(params.tau > 0.0)) throw DomainError("delay tau must be positive");
    if (!(params.b > 0.0 && params.b < 1.0)) throw DomainError("b must lie in (0, 1)");
    if (!(params.c > 0.0)) throw DomainError("c must be positive");
    if (!(params.capacity >= 0.0) || !std::isfinite(params.capacity)) {
        throw DomainError("capacity must be non-negative and finite");
    }

    const double bdp = params.bdp();
    const double target = params.tau * params.tau * params.tau * params.c / params.b;

    // Work with the excess y = W - C tau > 0: g(y) = (C tau + y) y^3 - target.
    // g(0) = -target < 0 and g grows without bound, so a bracket exists.
    auto g = [&](double y) { return (bdp + y) * y * y * y - target; };
    auto dg = [&](double y) { return y * y * y + 3.0 * (bdp + y) * y * y; };

    // The window search starts at C tau (1 + 1e-6) and doubles. The root also
    // exceeds target^(1/4), so starting there is never past it.
    double hi_window = std::fmax(bdp * (1.0 + 1e-6), std::pow(target, 0.25));
    double hi = hi_window - bdp;
    int doublings = 0;
    while (!(g(hi) > 0.0)) {
        if (++doublings > kMaxBracketDoublings) {
            std::ostringstream msg;
            msg << "fixed-point bracket search failed after " << kMaxBracketDoublings
                << " doublings";
            throw NumericError(msg.str(), 0.0, hi);
        }
        hi_window *= 2.0;
        hi = hi_window - bdp;
    }
    const double lo = 0.0;
    if (!(g(lo) < 0.0)) {
        throw NumericError("fixed-point bracket has no sign change", lo, hi);
    }

    int sign_changes = 0;
    double previous = g(lo);
    for (int i = 1; i <= kSignScanPoints; ++i) {
        const double value = g(hi * static_cast<double>(i) / kSignScanPoints);
        if ((previous < 0.0) != (value < 0.0)) ++sign_changes;
        previous = value;
    }

    const auto root = detail::safeguarded_newton(g, dg, lo, hi, 1e-3 * tol, 0.25 * tol * target,
                                                 kMaxIterations);
    const double excess = root.root;
    const double residual = std::fabs(g(excess)) / target;
    if (!root.converged || !(residual < tol)) {
        std::ostringstream msg;
        msg << "fixed-point solver did not converge (residual " << residual << ")";
        throw NumericError(msg.str(), bdp + root.lo, bdp + root.hi);
    }

    CubicFixedPointSolution out;
    out.excess = excess;
    out.point.w_hat = bdp + excess;
    out.point.p_hat = excess / out.point.w_hat;
    out.point.s_hat = std::cbrt(out.point.w_hat * params.b / params.c);
    out.residual = residual;
    out.iterations = root.iterations;
    out.single_sign_change = sign_changes == 1;
    return out;
}

FixedPoint cubic_fixed_point(const SystemParams& params, double tol) {
    return solve_cubic_fixed_point(params, tol).point;
}

double reno_fixed_point(double p_hat) {
    if (!(p_hat > 0.0 && p_hat <= 1.0)) {
        throw DomainError("loss probability must lie in (0, 1]");
    }
    return std::sqrt(2.0 / p_hat);
}

double cubic_w_of_p(double p_hat, const SystemParams& params) {
    if (!(p_hat > 0.0 && p_hat <= 1.0)) {
        throw DomainError("loss probability must lie in (0, 1]");
    }
    const double tau3 = params.tau * params.tau * params.tau;
    return std::pow(tau3 * params.c / (p_hat * p_hat * p_hat * params.b), 0.25);
}

FixedPoint reno_fixed_point_state(const SystemParams& params) {
    params.validate();
    const double bdp = params.bdp();
    // W^2 - C tau W - 2 = 0; excess W - C tau = 2 / W.
    const double w = 0.5 * (bdp + std::sqrt(bdp * bdp + 8.0));
    const double excess = 2.0 / w;
    FixedPoint fp;
    fp.w_hat = w;
    fp.p_hat = excess / w;
    fp.s_hat = params.tau * w / 2.0;
    return fp;
}

}  // namespace fluidcc
