#include "fluidcc/stability.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "fluidcc/csv.hpp"
#include "fluidcc/errors.hpp"

namespace fluidcc {

ExpansionCoeffs expansion_coeffs(const FixedPoint& fp, const SystemParams& params) {
    const double s = fp.s_hat;
    const double b = params.b;
    const double c = params.c;
    return ExpansionCoeffs{
        b * b * b / (27.0 * c * c * std::pow(s, 7)),
        b * b / (3.0 * c * std::pow(s, 5)),
        b / (s * s * s),
        c / s,
    };
}

double QtildeMatrix::quadratic_form(const std::array<double, 3>& z) const noexcept {
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) sum += z[i] * m[i][j] * z[j];
    }
    return sum;
}

namespace {

double smaller_eigenvalue_2x2(double a, double b, double d) {
    const double mean = 0.5 * (a + d);
    const double radius = std::hypot(0.5 * (a - d), b);
    const double lo = mean - radius;
    // mean + radius has no cancellation; recover lo from the determinant.
    const double hi = mean + radius;
    return hi > 0.0 ? (a * d - b * b) / hi : lo;
}

QtildeMatrix build_qtilde(const ExpansionCoeffs& k, double d1, double d4, double s_hat) {
    QtildeMatrix q;
    const double off = -d1 * k.beta / (2.0 * std::sqrt(2.0));
    q.m[0][0] = d1 * k.alpha;
    q.m[0][1] = off;
    q.m[1][0] = off;
    q.m[1][1] = d1 * k.gamma / 2.0;
    q.m[2][2] = d4 / s_hat;
    q.lambda_min = std::min(smaller_eigenvalue_2x2(q.m[0][0], off, q.m[1][1]), q.m[2][2]);
    return q;
}

}  // namespace

bool positive_definite_by_minors(const QtildeMatrix& q) noexcept {
    const auto& m = q.m;
    const double m1 = m[0][0];
    const double m2 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    const double m3 = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                      m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                      m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    return m1 > 0.0 && m2 > 0.0 && m3 > 0.0;
}

QtildeMatrix qtilde(const ExpansionCoeffs& coeffs, const LyapunovParams& lp, const FixedPoint& fp) {
    QtildeMatrix q = build_qtilde(coeffs, lp.d1, lp.d4, fp.s_hat);
    if (!(q.lambda_min > 0.0)) {
        throw DomainError("Q~ is not positive definite; check the fixed point inputs");
    }
    return q;
}

LyapunovParams lyapunov_params(const FixedPoint& fp, const SystemParams& params,
                               const LyapunovOptions& options) {
    if (!(fp.s_hat > 0.0)) throw DomainError("fixed point needs s_hat > 0");
    LyapunovParams lp;
    lp.s_hat = fp.s_hat;
    lp.d1 = fp.s_hat / params.c;
    lp.d4 = params.tau / fp.s_hat;
    lp.eps0 = std::max(fp.s_hat / (2.0 * params.c), params.tau / (4.0 * fp.s_hat));
    const double eps1_cap = std::min(fp.s_hat / (6.0 * params.c), params.tau / (4.0 * fp.s_hat));
    lp.eps1 = options.eps1 > 0.0 ? options.eps1 : 0.5 * eps1_cap;
    if (!(lp.eps1 < eps1_cap)) {
        throw DomainError("eps1 must be below min(s_hat / 6c, tau / 4 s_hat)");
    }

    const QtildeMatrix q = qtilde(expansion_coeffs(fp, params), lp, fp);
    lp.lambda_min = q.lambda_min;
    lp.k_margin = options.k_margin > 0.0 ? options.k_margin : 0.5 * q.lambda_min;
    if (!(lp.k_margin < q.lambda_min)) throw DomainError("K must lie in (0, lambda_min)");
    lp.razumikhin_p = options.razumikhin_p > 0.0 ? options.razumikhin_p : 1.01;
    if (!(lp.razumikhin_p > 1.0)) throw DomainError("Razumikhin constant must exceed 1");
    return lp;
}

double lyapunov_v(const ShiftedState& x, const LyapunovParams& lp) noexcept {
    const double x2sq = x.x2 * x.x2;
    return 0.5 * lp.d1 * x.x1 * x.x1 + 0.25 * lp.d4 * x2sq * x2sq;
}

double lyapunov_vdot(const ShiftedState& x, const ShiftedDerivative& dx,
                     const LyapunovParams& lp) noexcept {
    return lp.d1 * x.x1 * dx.dx1 + lp.d4 * x.x2 * x.x2 * x.x2 * dx.dx2;
}

std::vector<VdotSample> vdot_along(const Trajectory& traj, const InitialHistory& init,
                                   const FixedPoint& fp, const LyapunovParams& lp) {
    std::vector<VdotSample> out;
    if (traj.samples.empty()) return out;
    const SystemParams& params = traj.params;
    const double ratio = params.tau / traj.record_interval;
    const long long lag = std::llround(ratio);
    if (lag < 1 || std::fabs(static_cast<double>(lag) - ratio) > 1e-9 * ratio) {
        throw DomainError("recording interval must divide tau");
    }

    auto shifted_at = [&](long long index) {
        if (index >= 0) {
            const auto& s = traj.samples[static_cast<std::size_t>(index)];
            return to_shifted(FlowState{s.w_max, s.s}, fp);
        }
        return to_shifted(init.at(static_cast<double>(index) * traj.record_interval), fp);
    };

    const double decay = lp.lambda_min - lp.k_margin;
    out.reserve(traj.samples.size());
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        const long long idx = static_cast<long long>(i);
        const ShiftedState x = shifted_at(idx);
        const ShiftedState xd = shifted_at(idx - lag);
        const ShiftedDerivative dx = cubic_shifted_rhs(x, xd, fp, params);

        VdotSample v;
        v.t = traj.samples[i].t;
        v.norm_x = std::hypot(x.x1, x.x2);
        v.v = lyapunov_v(x, lp);
        v.vdot = lyapunov_vdot(x, dx, lp);

        double sup = 0.0;
        for (long long j = idx - lag; j <= idx; ++j) sup = std::max(sup, lyapunov_v(shifted_at(j), lp));
        v.razumikhin_holds = sup <= lp.razumikhin_p * v.v;
        const double n2 = v.norm_x * v.norm_x;
        v.decay_bound_holds = v.vdot <= -decay * n2 * n2;
        out.push_back(v);
    }
    return out;
}

double convergence_bound(double t, double v0, const LyapunovParams& lp, double lambda_min,
                         double t0) {
    if (!(v0 > 0.0)) throw DomainError("convergence bound needs V(t0) > 0");
    if (t < t0) throw DomainError("convergence bound needs t >= t0");
    const double rate = lp.eps1 * (lambda_min - lp.k_margin) / (lp.eps0 * lp.eps0);
    return 1.0 / (rate * (t - t0) + lp.eps1 / v0);
}

double basin_delta(double epsilon, const LyapunovParams& lp) {
    if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
    return epsilon * epsilon * std::sqrt(lp.eps1 / lp.eps0);
}

void write_convergence_csv(std::ostream& os, const std::vector<VdotSample>& samples,
                           const LyapunovParams& lp) {
    os << "t,norm_x,V,Vdot,bound\n";
    if (samples.empty()) return;
    const double v0 = samples.front().v;
    const double t0 = samples.front().t;
    for (const auto& s : samples) {
        const double bound = v0 > 0.0 ? convergence_bound(s.t, v0, lp, lp.lambda_min, t0) : 0.0;
        write_csv_row(os, s.t, s.norm_x, s.v, s.vdot, bound);
    }
}

}  // namespace fluidcc
