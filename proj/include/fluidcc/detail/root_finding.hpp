#pragma once

#include <cmath>
#include <limits>

namespace fluidcc::detail {

struct RootResult {
    double root = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Newton iteration kept inside a sign-change bracket [lo, hi]; any step that
// leaves the bracket or fails to halve it is replaced by bisection. Requires
// f(lo) < 0 < f(hi) (increasing orientation). Stops when the bracket width
// falls below rel_tol * |x| (or two ulps), or |f| <= f_tol.
template <class F, class DF>
RootResult safeguarded_newton(F&& f, DF&& df, double lo, double hi, double rel_tol, double f_tol,
                              int max_iterations) {
    RootResult result{0.5 * (lo + hi), lo, hi, 0, false};
    double x = result.root;
    double width_before_last = hi - lo;
    for (int it = 1; it <= max_iterations; ++it) {
        result.iterations = it;
        const double fx = f(x);
        if (std::fabs(fx) <= f_tol) {
            result.root = x;
            result.converged = true;
            break;
        }
        if (fx < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        const double width = hi - lo;
        const double ulp2 = 2.0 * std::numeric_limits<double>::epsilon() * std::fabs(x);
        if (width <= std::fmax(rel_tol * std::fabs(x), ulp2)) {
            result.root = x;
            result.converged = true;
            break;
        }
        const double slope = df(x);
        double next = (slope > 0.0 && std::isfinite(slope)) ? x - fx / slope : lo - 1.0;
        if (!(next > lo && next < hi) || width > 0.5 * width_before_last) {
            next = 0.5 * (lo + hi);
        }
        width_before_last = width;
        x = next;
        result.root = x;
    }
    result.lo = lo;
    result.hi = hi;
    return result;
}

}  // namespace fluidcc::detail
