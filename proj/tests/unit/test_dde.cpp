#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "../support/oracles.hpp"
#include "fluidcc/dde.hpp"
#include "fluidcc/errors.hpp"
#include "fluidcc/fixed_point.hpp"
#include "fluidcc/protocols.hpp"

using namespace fluidcc;

namespace {

SystemParams make_params(double capacity, double tau, double b = 0.2, double c = 0.4) {
    SystemParams p;
    p.capacity = capacity;
    p.tau = tau;
    p.b = b;
    p.c = c;
    return p;
}

double oracle_order(double capacity, double tau, double w0, long long k, double t_end) {
    auto endpoint = [&](long long kk) {
        oracle::RenoDirect d(capacity, tau, w0, kk);
        d.run_to(t_end);
        return d.grid.back();
    };
    const double a = endpoint(k), b = endpoint(2 * k), c = endpoint(4 * k);
    return std::log2(std::fabs(a - b) / std::fabs(b - c));
}

}  // namespace

TEST_CASE("initial history: constant and sampled") {
    const auto constant = InitialHistory::constant(FlowState{10.0, 1.0});
    CHECK(constant.is_constant());
    CHECK(constant.at(-5.0).w_max == 10.0);

    const auto sampled = InitialHistory::sampled({-1.0, -0.5, 0.0},
                                                 {FlowState{1.0, 0.0}, FlowState{2.0, 1.0}, FlowState{4.0, 3.0}});
    CHECK_FALSE(sampled.is_constant());
    CHECK(sampled.earliest() == -1.0);
    CHECK(sampled.at(-0.75).w_max == doctest::Approx(1.5));
    CHECK(sampled.at(-0.25).s == doctest::Approx(2.0));
    CHECK(sampled.at(0.0).w_max == 4.0);

    CHECK_THROWS_AS(InitialHistory::sampled({-1.0, 0.5}, {FlowState{}, FlowState{}}), DomainError);
    CHECK_THROWS_AS(InitialHistory::sampled({0.0, -1.0}, {FlowState{}, FlowState{}}), DomainError);
    CHECK_THROWS_AS(InitialHistory::sampled({-1.0, 0.0}, {FlowState{}}), DomainError);
}

TEST_CASE("history buffer interpolates through its nodes") {
    HistoryBuffer buf(1.0);
    // x(t) = t^3 with exact slopes; Hermite reproduces cubics exactly.
    for (int i = 0; i <= 10; ++i) {
        const double t = 0.1 * i;
        buf.push(t, FlowState{t * t * t, 2.0 * t}, Derivative{3.0 * t * t, 2.0});
    }
    const double node = 0.1 * 3;
    CHECK(buf.at(node).w_max == node * node * node);
    CHECK(buf.at(0.35).w_max == doctest::Approx(0.35 * 0.35 * 0.35).epsilon(1e-13));
    CHECK(buf.at(0.77).s == doctest::Approx(1.54).epsilon(1e-13));
    CHECK_THROWS_AS(buf.at(1.5), std::logic_error);
    CHECK_THROWS_AS(buf.at(-0.5), std::logic_error);
    CHECK_THROWS_AS(buf.push(0.5, FlowState{}, Derivative{}), std::logic_error);
}

TEST_CASE("history buffer keeps at least the retained span") {
    HistoryBuffer buf(0.25);
    for (int i = 0; i <= 100; ++i) buf.push(0.01 * i, FlowState{1.0, 0.0}, Derivative{});
    CHECK(buf.newest_time() - buf.oldest_time() >= 0.25 - 1e-12);
    CHECK(buf.size() < 40);
}

TEST_CASE("trajectory started at the CUBIC fixed point stays there") {
    const SystemParams p = make_params(12500.0, 0.01);
    const FixedPoint fp = cubic_fixed_point(p);
    const auto traj = integrate(p, make_window_function(Algorithm::Cubic), InitialHistory::constant(fp.state()),
                                100.0 * p.tau, p.tau / 10.0);
    REQUIRE_FALSE(traj.halted);
    for (const auto& s : traj.samples) {
        CHECK(std::fabs(s.w_max / fp.w_hat - 1.0) < 1e-6);
        CHECK(std::fabs(s.s / fp.s_hat - 1.0) < 1e-6);
    }
}

TEST_CASE("without loss, s advances at unit rate") {
    const SystemParams p = make_params(12500.0, 0.01);
    const FlowState start{40.0, 0.2};
    const auto traj = integrate(p, make_window_function(Algorithm::Reno), InitialHistory::constant(start),
                                0.5, p.tau / 8.0);
    REQUIRE_FALSE(traj.halted);
    for (const auto& s : traj.samples) {
        CHECK(s.p == 0.0);
        CHECK(s.w_max == start.w_max);
        CHECK(s.s == doctest::Approx(start.s + s.t).epsilon(1e-13));
    }
}

TEST_CASE("Reno model agrees with the direct window equation") {
    const SystemParams p = make_params(12500.0, 0.01);
    const long long k = 20;
    const FlowState start{100.0, 0.5};
    const auto traj = integrate(p, make_window_function(Algorithm::Reno), InitialHistory::constant(start),
                                50.0 * p.tau, p.tau / k);
    oracle::RenoDirect direct(p.capacity, p.tau, reno_window(start, p), k);
    direct.run_to(50.0 * p.tau);
    REQUIRE(direct.grid.size() == traj.samples.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        worst = std::max(worst, std::fabs(traj.samples[i].w / direct.grid[i] - 1.0));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("samples stay valid: s >= 0 and W recomputed from the state") {
    const SystemParams p = make_params(12500.0, 0.01);
    const FixedPoint fp = cubic_fixed_point(p);
    const auto fn = make_window_function(Algorithm::Cubic);
    const auto traj = integrate(p, fn, InitialHistory::constant(FlowState{fp.w_hat + 10.0, 0.5}), 2.0, p.tau / 10.0);
    REQUIRE_FALSE(traj.halted);
    for (const auto& s : traj.samples) {
        CHECK(s.s >= 0.0);
        CHECK(s.w == fn(FlowState{s.w_max, s.s}, p));
    }
}

TEST_CASE("integration is bit-for-bit deterministic") {
    const SystemParams p = make_params(12500.0, 0.01);
    const auto fn = make_window_function(Algorithm::Cubic);
    const auto init = InitialHistory::constant(FlowState{140.0, 1.0});
    const auto a = integrate(p, fn, init, 1.0, p.tau / 10.0);
    const auto b = integrate(p, fn, init, 1.0, p.tau / 10.0);
    REQUIRE(a.samples.size() == b.samples.size());
    CHECK(std::memcmp(a.samples.data(), b.samples.data(), a.samples.size() * sizeof(TrajectorySample)) == 0);
}

TEST_CASE("step validation") {
    const SystemParams p = make_params(12500.0, 0.01);
    const auto fn = make_window_function(Algorithm::Cubic);
    const auto init = InitialHistory::constant(FlowState{140.0, 1.0});
    CHECK_THROWS_AS(integrate(p, fn, init, 1.0, p.tau / 3.0), DomainError);
    CHECK_THROWS_AS(integrate(p, fn, init, 1.0, 0.003), DomainError);
    CHECK_THROWS_AS(integrate(p, fn, init, 0.0, p.tau / 4.0), DomainError);
    CHECK_THROWS_AS(integrate(p, fn, init, 1.0, p.tau / 4.0, {0}), DomainError);
    const auto short_history = InitialHistory::sampled({-0.001, 0.0}, {FlowState{140.0, 1.0}, FlowState{140.0, 1.0}});
    CHECK_THROWS_AS(integrate(p, fn, short_history, 1.0, p.tau / 4.0), DomainError);
}

TEST_CASE("runaway state halts with a diagnostic") {
    const SystemParams p = make_params(1.0, 0.1);
    const WindowFunction explosive("explosive", [](const FlowState& s, const SystemParams&) {
        return s.w_max * s.w_max;
    });
    const auto traj = integrate(p, explosive, InitialHistory::constant(FlowState{2.0, 0.0}), 50.0, 0.025);
    CHECK(traj.halted);
    CHECK_FALSE(traj.diagnostic.empty());
    CHECK(traj.samples.back().t < 50.0);
}

TEST_CASE("record thinning keeps every n-th step") {
    const SystemParams p = make_params(12500.0, 0.01);
    const auto fn = make_window_function(Algorithm::Cubic);
    const auto init = InitialHistory::constant(FlowState{140.0, 1.0});
    const auto full = integrate(p, fn, init, 1.0, p.tau / 10.0);
    const auto thin = integrate(p, fn, init, 1.0, p.tau / 10.0, {10});
    CHECK(thin.record_interval == doctest::Approx(p.tau));
    REQUIRE(thin.samples.size() == 101);
    for (std::size_t i = 0; i < thin.samples.size(); ++i) {
        CHECK(thin.samples[i].w_max == full.samples[10 * i].w_max);
    }
}

TEST_CASE("parallel flows match sequential runs") {
    const SystemParams p = make_params(12500.0, 0.01);
    const auto fn = make_window_function(Algorithm::Cubic);
    const std::vector<InitialHistory> inits{InitialHistory::constant(FlowState{140.0, 1.0}),
                                            InitialHistory::constant(FlowState{110.0, 3.0}),
                                            InitialHistory::constant(FlowState{125.0, 0.0})};
    const auto trajs = integrate_flows(p, fn, inits, 0.5, p.tau / 10.0);
    REQUIRE(trajs.size() == 3);
    for (std::size_t f = 0; f < 3; ++f) {
        const auto solo = integrate(p, fn, inits[f], 0.5, p.tau / 10.0);
        CHECK(trajs[f].samples.back().w == solo.samples.back().w);
    }
}

TEST_CASE("trajectory CSV layout") {
    const SystemParams p = make_params(12500.0, 0.01);
    const auto traj = integrate(p, make_window_function(Algorithm::Reno),
                                InitialHistory::constant(FlowState{100.0, 0.0}), 0.04, p.tau / 4.0);
    std::ostringstream os;
    write_trajectory_csv(os, traj);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,w_max,s,w,p");
    std::getline(in, line);
    CHECK(line == "0,100,0,50,0");
    int rows = 1;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == static_cast<int>(traj.samples.size()));
}

TEST_CASE("self-convergence order near the CUBIC fixed point") {
    const SystemParams p = make_params(10.0, 0.1);
    const FixedPoint fp = cubic_fixed_point(p);
    const auto fn = make_window_function(Algorithm::Cubic);
    const auto init = InitialHistory::constant(FlowState{fp.w_hat + 0.05, fp.s_hat + 0.02});
    const auto check = integrate(p, fn, init, 1.0, p.tau / 4.0);
    for (const auto& s : check.samples) REQUIRE(s.p > 0.0);
    const OrderEstimate est = convergence_order_check(fn, p, init, 1.0, p.tau / 4.0);
    CHECK(est.order >= 3.0);
    CHECK(est.order <= 5.0);
}

TEST_CASE("order study on a constant solution sees no error") {
    const SystemParams p = make_params(12500.0, 0.01);
    const FixedPoint fp = cubic_fixed_point(p);
    const OrderEstimate est = convergence_order_check(make_window_function(Algorithm::Cubic), p,
                                                      InitialHistory::constant(fp.state()), 0.2, p.tau / 4.0);
    CHECK(est.coarse_diff < 1e-10);
    CHECK(est.fine_diff < 1e-10);
}

TEST_CASE("Reno order matches the order of the direct window equation") {
    // C tau = 1 keeps the loss probability well away from its clamp.
    const SystemParams p = make_params(10.0, 0.1);
    const FixedPoint fp = reno_fixed_point_state(p);
    const FlowState start{2.0 * (fp.w_hat + 0.1), 0.0};
    const auto fn = make_window_function(Algorithm::Reno);
    const double t_end = 10.0 * p.tau;
    const auto traj = integrate(p, fn, InitialHistory::constant(start), t_end, p.tau / 4.0);
    for (const auto& s : traj.samples) REQUIRE(s.p > 0.0);
    const OrderEstimate ours = convergence_order_check(fn, p, InitialHistory::constant(start), t_end, p.tau / 4.0);
    const double theirs = oracle_order(p.capacity, p.tau, reno_window(start, p), 4, t_end);
    CHECK(ours.order >= 3.0);
    CHECK(ours.order <= 5.0);
    CHECK(theirs >= 3.0);
    CHECK(theirs <= 5.0);
    CHECK(std::fabs(ours.order - theirs) < 0.5);
}
