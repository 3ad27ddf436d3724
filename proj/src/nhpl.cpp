#include "fluidcc/nhpl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "fluidcc/csv.hpp"
#include "fluidcc/detail/root_finding.hpp"
#include "fluidcc/errors.hpp"

namespace fluidcc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double simpson_step(const RateFunction& f, double a, double fa, double b, double fb, double m,
                    double fm, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const RateFunction& f, double a, double b, double tol) {
    if (!(b > a)) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_step(f, a, fa, b, fb, m, fm, whole, tol, 40);
}

std::optional<double> inverse_transform_T(const RateFunction& rate, double u, double horizon,
                                          const QuadratureOptions& options) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("uniform sample must lie in (0, 1)");
    if (!(horizon > 0.0)) return std::nullopt;
    const double target = -std::log(u);
    const double panel = options.panel > 0.0 ? options.panel : horizon / 64.0;
    const double tol = options.tolerance;

    double acc = 0.0;
    double a = 0.0;
    while (a < horizon) {
        const double b = std::min(a + panel, horizon);
        const double panel_tol = std::max(tol * (b - a) / horizon, 1e-16);
        const double mass = adaptive_simpson(rate, a, b, panel_tol);
        if (acc + mass >= target) {
            const double base = acc;
            auto g = [&](double t) {
                return base + adaptive_simpson(rate, a, t, panel_tol) - target;
            };
            if (acc + mass == target) return b;
            const auto root = detail::safeguarded_newton(g, rate, a, b, 1e-15, tol, 200);
            return root.root;
        }
        acc += mass;
        a = b;
    }
    return std::nullopt;
}

std::size_t pick_losing_flow(std::span<const double> windows, double u) {
    double total = 0.0;
    for (double w : windows) {
        if (!(w >= 0.0)) throw DomainError("windows must be nonnegative");
        total += w;
    }
    if (!(total > 0.0)) throw DomainError("at least one window must be positive");
    const double mark = u * total;
    double cum = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t f = 0; f < windows.size(); ++f) {
        if (windows[f] > 0.0) last_positive = f;
        cum += windows[f];
        if (cum > mark && windows[f] > 0.0) return f;
    }
    return last_positive;
}

double LossSchedule::next_indication() const noexcept {
    return pending.empty() ? kInf : pending.top().time;
}

SimState::SimState(const SystemParams& p, WindowFunction fn, std::span<const FlowState> init,
                   std::uint64_t seed, SimOptions opts)
    : params(p), window_fn(std::move(fn)), options(opts), rng(seed) {
    params.validate();
    if (init.empty()) throw DomainError("simulation needs at least one flow");
    if (static_cast<std::size_t>(params.flows) != init.size()) {
        throw DomainError("flow count does not match the number of initial states");
    }
    if (options.horizon <= 0.0) options.horizon = 1e4 * params.tau;
    schedule.llis.reserve(init.size());
    schedule.glli = -kInf;
    for (const auto& s : init) {
        if (!(s.w_max > 0.0) || !(s.s >= 0.0)) {
            throw DomainError("initial flow state requires w_max > 0 and s >= 0");
        }
        w_loss.push_back(s.w_max);
        schedule.llis.push_back(-s.s);
        schedule.glli = std::max(schedule.glli, -s.s);
    }
}

double SimState::window(std::size_t flow, double t) const {
    return window_fn(FlowState{w_loss[flow], t - schedule.llis[flow]}, params);
}

double SimState::total_window(double t) const {
    double sum = 0.0;
    for (std::size_t f = 0; f < w_loss.size(); ++f) sum += window(f, t);
    return sum;
}

double SimState::loss_rate(double t) const {
    const double bdp = params.bdp();
    if (options.coupling == LossCoupling::Aggregate) {
        const double excess = total_window(t) - static_cast<double>(w_loss.size()) * bdp;
        return std::max(excess, 0.0) / params.tau;
    }
    double sum = 0.0;
    for (std::size_t f = 0; f < w_loss.size(); ++f) sum += std::max(window(f, t) - bdp, 0.0);
    return sum / params.tau;
}

void SimState::record_until(double t) {
    if (!(options.sample_interval > 0.0)) return;
    while (next_sample < t && next_sample <= t_stop) {
        TracePoint point;
        point.t = next_sample;
        point.windows.reserve(w_loss.size());
        double sum = 0.0;
        for (std::size_t f = 0; f < w_loss.size(); ++f) {
            point.windows.push_back(window(f, next_sample));
            sum += point.windows.back();
        }
        point.mean = sum / static_cast<double>(w_loss.size());
        trace.push_back(std::move(point));
        next_sample = static_cast<double>(trace.size()) * options.sample_interval;
    }
}

void SimState::apply_next_indication() {
    const PendingIndication next = schedule.pending.top();
    schedule.pending.pop();
    const double before = window(next.flow, next.time);
    const FlowState fresh = window_fn.reset(before);
    w_loss[next.flow] = fresh.w_max;
    schedule.llis[next.flow] = next.time;
    schedule.glli = std::max(schedule.glli, next.time);
    events.push_back(LossEvent{LossEvent::Kind::Indication, next.time, next.flow, before,
                               window_fn(fresh, params)});
}

double t_bdp(const SimState& state, double now, double limit) {
    const double target = static_cast<double>(state.w_loss.size()) * state.params.bdp();
    auto reached = [&](double t) { return state.total_window(t) >= target; };
    if (reached(now)) return now;
    const double step = state.params.tau;
    double lo = now;
    while (lo < limit) {
        const double hi = std::min(lo + step, limit);
        if (reached(hi)) {
            double a = lo;
            double b = hi;
            for (int i = 0; i < 200 && b - a > 4.0 * std::numeric_limits<double>::epsilon() * std::fabs(b); ++i) {
                const double m = 0.5 * (a + b);
                (reached(m) ? b : a) = m;
            }
            return b;
        }
        lo = hi;
    }
    return kInf;
}

std::optional<double> compute_T(const SimState& state, double t0, double u, double limit) {
    const RateFunction rate = [&state, t0](double x) { return state.loss_rate(t0 + x); };
    const auto offset = inverse_transform_T(rate, u, limit - t0, state.options.quadrature);
    if (!offset) return std::nullopt;
    return t0 + *offset;
}

GenerateResult generate_poi_loss(SimState& state) {
    LossSchedule& sch = state.schedule;
    GenerateResult result;
    while (true) {
        const double gnpli = sch.next_indication();
        const double now = std::max(sch.last_loss, sch.glli);
        const double horizon_end = now + state.options.horizon;
        const double limit = std::min({gnpli, horizon_end, state.t_stop});

        std::optional<double> loss;
        const double start = t_bdp(state, now, limit);
        if (std::isfinite(start)) loss = compute_T(state, start, state.rng.uniform(), limit);

        if (loss && *loss < gnpli && *loss < state.t_stop) {
            std::vector<double> windows(state.w_loss.size());
            for (std::size_t f = 0; f < windows.size(); ++f) windows[f] = state.window(f, *loss);
            const std::size_t flow = pick_losing_flow(windows, state.rng.uniform());
            sch.pending.push(PendingIndication{*loss + state.params.tau, flow});
            state.events.push_back(
                LossEvent{LossEvent::Kind::Loss, *loss, flow, windows[flow], windows[flow]});
            result.status = GenerateStatus::Scheduled;
            result.loss_time = *loss;
            result.flow = flow;
            return result;
        }
        if (gnpli <= std::min(horizon_end, state.t_stop)) {
            // The candidate falls after the next indication: move to it and retry.
            state.record_until(gnpli);
            state.apply_next_indication();
            ++result.regenerations;
            continue;
        }
        if (state.t_stop <= horizon_end) {
            result.status = GenerateStatus::PastEnd;
            return result;
        }
        result.status = GenerateStatus::NoLossInHorizon;
        result.resume_at = horizon_end;
        return result;
    }
}

SimResult run_simulation(const SystemParams& params, const WindowFunction& window_fn,
                         std::span<const FlowState> init, std::uint64_t seed, double t_end,
                         const SimOptions& options) {
    if (!(t_end > 0.0)) throw DomainError("t_end must be positive");
    SimState state(params, window_fn, init, seed, options);
    state.t_stop = t_end;
    state.schedule.last_loss = 0.0;
    while (true) {
        const GenerateResult r = generate_poi_loss(state);
        if (r.status == GenerateStatus::Scheduled) {
            state.record_until(r.loss_time);
            state.schedule.last_loss = r.loss_time;
        } else if (r.status == GenerateStatus::NoLossInHorizon) {
            state.record_until(r.resume_at);
            state.schedule.last_loss = r.resume_at;
        } else {
            break;
        }
    }
    state.record_until(std::nextafter(t_end, kInf));
    return SimResult{std::move(state.events), std::move(state.trace), seed};
}

double trace_mean(const std::vector<TracePoint>& trace, double from) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& p : trace) {
        if (p.t >= from) {
            sum += p.mean;
            ++n;
        }
    }
    return n > 0 ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

void write_event_csv(std::ostream& os, const std::vector<LossEvent>& events) {
    os << "event_type,time,flow,window_before,window_after\n";
    for (const auto& e : events) {
        write_csv_row(os, e.kind == LossEvent::Kind::Loss ? "loss" : "indication", e.time, e.flow,
                      e.window_before, e.window_after);
    }
}

void write_trace_csv(std::ostream& os, const std::vector<TracePoint>& trace) {
    os << "t,flow,w\n";
    for (const auto& p : trace) {
        for (std::size_t f = 0; f < p.windows.size(); ++f) write_csv_row(os, p.t, f, p.windows[f]);
        write_csv_row(os, p.t, -1, p.mean);
    }
}

}  // namespace fluidcc
