#include "fluidcc/dde.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "fluidcc/csv.hpp"
#include "fluidcc/errors.hpp"

namespace fluidcc {

InitialHistory InitialHistory::constant(const FlowState& state) {
    InitialHistory h;
    h.thetas_ = {0.0};
    h.states_ = {state};
    return h;
}

InitialHistory InitialHistory::sampled(std::vector<double> thetas, std::vector<FlowState> states) {
    if (thetas.empty() || thetas.size() != states.size()) {
        throw DomainError("sampled history needs matching, non-empty theta and state lists");
    }
    for (std::size_t i = 1; i < thetas.size(); ++i) {
        if (!(thetas[i] > thetas[i - 1])) {
            throw DomainError("history sample times must be strictly increasing");
        }
    }
    if (thetas.back() != 0.0) {
        throw DomainError("history samples must end at theta = 0");
    }
    InitialHistory h;
    h.thetas_ = std::move(thetas);
    h.states_ = std::move(states);
    return h;
}

double InitialHistory::earliest() const noexcept {
    return is_constant() ? -std::numeric_limits<double>::infinity() : thetas_.front();
}

FlowState InitialHistory::at(double theta) const {
    if (is_constant()) return states_.front();
    if (theta <= thetas_.front()) return states_.front();
    if (theta >= 0.0) return states_.back();
    const auto it = std::upper_bound(thetas_.begin(), thetas_.end(), theta);
    const std::size_t i = static_cast<std::size_t>(it - thetas_.begin());
    const double u = (theta - thetas_[i - 1]) / (thetas_[i] - thetas_[i - 1]);
    const FlowState& a = states_[i - 1];
    const FlowState& b = states_[i];
    return FlowState{a.w_max + u * (b.w_max - a.w_max), a.s + u * (b.s - a.s)};
}

HistoryBuffer::HistoryBuffer(double retain_span) : retain_span_(retain_span) {}

void HistoryBuffer::push(double t, const FlowState& state, const Derivative& slope) {
    if (!nodes_.empty() && !(t > nodes_.back().t)) {
        throw std::logic_error("history samples must be strictly increasing in time");
    }
    nodes_.push_back(Node{t, state, slope});
    const double cutoff = t - retain_span_;
    while (nodes_.size() > 2 && nodes_[1].t <= cutoff) {
        nodes_.pop_front();
    }
}

double HistoryBuffer::oldest_time() const {
    if (nodes_.empty()) throw std::logic_error("history buffer is empty");
    return nodes_.front().t;
}

double HistoryBuffer::newest_time() const {
    if (nodes_.empty()) throw std::logic_error("history buffer is empty");
    return nodes_.back().t;
}

FlowState HistoryBuffer::at(double t) const {
    if (nodes_.empty() || t < nodes_.front().t || t > nodes_.back().t) {
        std::ostringstream msg;
        msg << "history query at t=" << t << " outside the stored range";
        throw std::logic_error(msg.str());
    }
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t,
                               [](const Node& n, double value) { return n.t < value; });
    if (it->t == t) return it->state;
    const Node& right = *it;
    const Node& left = *(it - 1);
    const double h = right.t - left.t;
    const double u = (t - left.t) / h;
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    const double h10 = u3 - 2.0 * u2 + u;
    const double h01 = -2.0 * u3 + 3.0 * u2;
    const double h11 = u3 - u2;
    return FlowState{
        h00 * left.state.w_max + h10 * h * left.slope.d_w_max + h01 * right.state.w_max +
            h11 * h * right.slope.d_w_max,
        h00 * left.state.s + h10 * h * left.slope.d_s + h01 * right.state.s +
            h11 * h * right.slope.d_s,
    };
}

namespace {

struct StepPlan {
    double h;
    long long steps;
};

StepPlan plan_steps(double tau, double t_end, double step) {
    if (!(t_end > 0.0)) throw DomainError("t_end must be positive");
    if (!(step > 0.0)) throw DomainError("step must be positive");
    const double ratio = tau / step;
    const long long k = std::llround(ratio);
    if (k < 4) throw DomainError("step must satisfy step <= tau / 4");
    if (std::fabs(static_cast<double>(k) - ratio) > 1e-9 * ratio) {
        throw DomainError("step must divide tau into an integer number of parts");
    }
    const double h = tau / static_cast<double>(k);
    const double exact = t_end / h;
    long long n = std::llround(exact);
    if (std::fabs(static_cast<double>(n) - exact) > 1e-9 * exact) {
        n = static_cast<long long>(std::ceil(exact));
    }
    return StepPlan{h, std::max<long long>(n, 1)};
}

FlowState advance(const FlowState& y, const Derivative& d, double scale) {
    return FlowState{y.w_max + scale * d.d_w_max, y.s + scale * d.d_s};
}

TrajectorySample make_sample(double t, const FlowState& y, const SystemParams& params,
                             const WindowFunction& window_fn) {
    const double w = window_fn(y, params);
    const double p = w > 0.0 ? loss_probability(w, params) : 0.0;
    return TrajectorySample{t, y.w_max, y.s, w, p};
}

}  // namespace

Trajectory integrate(const SystemParams& params, const WindowFunction& window_fn,
                     const InitialHistory& init, double t_end, double step,
                     const IntegrationOptions& options) {
    params.validate();
    if (options.record_every < 1) throw DomainError("record_every must be at least 1");
    const StepPlan plan = plan_steps(params.tau, t_end, step);
    if (init.earliest() > -params.tau * (1.0 - 1e-12)) {
        throw DomainError("initial history must cover [-tau, 0]");
    }

    const double h = plan.h;
    const double tau = params.tau;
    HistoryBuffer buffer(tau + 2.0 * h);

    auto delayed_state = [&](double query) {
        return query <= 0.0 ? init.at(query) : buffer.at(query);
    };
    auto rhs = [&](double t, const FlowState& y) {
        const FlowState yd = delayed_state(t - tau);
        const double wd = window_fn(yd, params);
        return fluid_rhs(y, wd, loss_probability(wd, params), params, window_fn);
    };

    Trajectory traj;
    traj.params = params;
    traj.algorithm = window_fn.name();
    traj.step = h;
    traj.record_interval = h * options.record_every;
    traj.samples.reserve(static_cast<std::size_t>(plan.steps / options.record_every + 2));

    FlowState y = init.at(0.0);
    if (!(y.w_max > 0.0) || !(y.s >= 0.0)) {
        throw DomainError("initial state requires w_max > 0 and s >= 0");
    }
    Derivative k1 = rhs(0.0, y);
    buffer.push(0.0, y, k1);
    traj.samples.push_back(make_sample(0.0, y, params, window_fn));

    for (long long i = 0; i < plan.steps; ++i) {
        const double t = static_cast<double>(i) * h;
        const Derivative k2 = rhs(t + 0.5 * h, advance(y, k1, 0.5 * h));
        const Derivative k3 = rhs(t + 0.5 * h, advance(y, k2, 0.5 * h));
        const Derivative k4 = rhs(t + h, advance(y, k3, h));
        y = FlowState{
            y.w_max + h / 6.0 * (k1.d_w_max + 2.0 * k2.d_w_max + 2.0 * k3.d_w_max + k4.d_w_max),
            y.s + h / 6.0 * (k1.d_s + 2.0 * k2.d_s + 2.0 * k3.d_s + k4.d_s),
        };
        const double t_next = static_cast<double>(i + 1) * h;
        if (!(y.w_max > 0.0) || !std::isfinite(y.w_max) || !std::isfinite(y.s)) {
            std::ostringstream msg;
            msg << "state left the valid region at t=" << t_next << " (w_max=" << y.w_max
                << ", s=" << y.s << ")";
            traj.halted = true;
            traj.diagnostic = msg.str();
            break;
        }
        k1 = rhs(t_next, y);
        buffer.push(t_next, y, k1);
        if ((i + 1) % options.record_every == 0) {
            traj.samples.push_back(make_sample(t_next, y, params, window_fn));
        }
    }
    return traj;
}

std::vector<Trajectory> integrate_flows(const SystemParams& params, const WindowFunction& window_fn,
                                        std::span<const InitialHistory> inits, double t_end,
                                        double step, const IntegrationOptions& options) {
    std::vector<std::future<Trajectory>> jobs;
    jobs.reserve(inits.size());
    for (const auto& init : inits) {
        jobs.push_back(std::async(std::launch::async, [&, init_ptr = &init] {
            return integrate(params, window_fn, *init_ptr, t_end, step, options);
        }));
    }
    std::vector<Trajectory> out;
    out.reserve(jobs.size());
    for (auto& job : jobs) out.push_back(job.get());
    return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory) {
    os << "t,w_max,s,w,p\n";
    for (const auto& s : trajectory.samples) {
        write_csv_row(os, s.t, s.w_max, s.s, s.w, s.p);
    }
}

OrderEstimate convergence_order_check(const WindowFunction& window_fn, const SystemParams& params,
                                      const InitialHistory& init, double t_end, double base_step) {
    auto endpoint = [&](double h) {
        const Trajectory traj = integrate(params, window_fn, init, t_end, h);
        if (traj.halted) throw NumericError("order study trajectory halted: " + traj.diagnostic, 0, 0);
        return traj.samples.back().w;
    };
    const double w1 = endpoint(base_step);
    const double w2 = endpoint(base_step / 2.0);
    const double w4 = endpoint(base_step / 4.0);
    OrderEstimate est;
    est.coarse_diff = std::fabs(w1 - w2);
    est.fine_diff = std::fabs(w2 - w4);
    if (est.fine_diff > 0.0 && est.coarse_diff > 0.0) {
        est.order = std::log2(est.coarse_diff / est.fine_diff);
    } else {
        est.order = std::numeric_limits<double>::quiet_NaN();
    }
    return est;
}

}  // namespace fluidcc
