#include "fluidcc/protocols.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "fluidcc/errors.hpp"

namespace fluidcc {

std::string to_string(Algorithm algorithm) {
    return algorithm == Algorithm::Reno ? "reno" : "cubic";
}

Algorithm parse_algorithm(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (lower == "reno") return Algorithm::Reno;
    if (lower == "cubic") return Algorithm::Cubic;
    throw DomainError("unknown algorithm '" + std::string(text) + "' (expected reno or cubic)");
}

double RenoWindow::operator()(const FlowState& state, const SystemParams& params) const {
    return state.w_max / 2.0 + state.s / params.tau;
}

double CubicWindow::operator()(const FlowState& state, const SystemParams& params) const {
    const double plateau_time = std::cbrt(state.w_max * params.b / params.c);
    const double offset = state.s - plateau_time;
    return params.c * offset * offset * offset + state.w_max;
}

double reno_window(const FlowState& state, const SystemParams& params) {
    return RenoWindow{}(state, params);
}

double cubic_window(const FlowState& state, const SystemParams& params) {
    return CubicWindow{}(state, params);
}

WindowFunction make_window_function(Algorithm algorithm) {
    if (algorithm == Algorithm::Reno) return WindowFunction("reno", RenoWindow{});
    return WindowFunction("cubic", CubicWindow{});
}

FlowState loss_reset(double window_at_loss, Algorithm algorithm) {
    return make_window_function(algorithm).reset(window_at_loss);
}

ShiftedState to_shifted(const FlowState& state, const FixedPoint& fp) noexcept {
    return ShiftedState{state.w_max - fp.w_hat, state.s - fp.s_hat};
}

FlowState from_shifted(const ShiftedState& x, const FixedPoint& fp) noexcept {
    return FlowState{x.x1 + fp.w_hat, x.x2 + fp.s_hat};
}

namespace {

// Phi = x2 + s_hat - cbrt(b (x1 + W_hat) / c), written with the difference of
// cube roots expanded so that Phi stays accurate for small x.
double shifted_phase(const ShiftedState& x, const FixedPoint& fp, const SystemParams& params) {
    const double root = std::cbrt(params.b * (x.x1 + fp.w_hat) / params.c);
    const double s_hat = fp.s_hat;
    const double denom = s_hat * s_hat + s_hat * root + root * root;
    return x.x2 + (-params.b * x.x1 / params.c) / denom;
}

}  // namespace

ShiftedDerivative cubic_shifted_rhs(const ShiftedState& x, const ShiftedState& x_delayed,
                                    const FixedPoint& fp, const SystemParams& params) {
    if (!(x.x1 > -fp.w_hat) || !(x_delayed.x1 > -fp.w_hat)) {
        throw DomainError("shifted state requires x1 > -W_hat");
    }
    const double phi = shifted_phase(x, fp, params);
    const double phi_delayed = shifted_phase(x_delayed, fp, params);

    // Psi_tau * p_tau = max(Psi_tau - C tau, 0), with W_hat - C tau = W_hat p_hat.
    const double delayed_excess =
        params.c * phi_delayed * phi_delayed * phi_delayed + x_delayed.x1 + fp.w_hat * fp.p_hat;
    const double loss_rate = std::max(delayed_excess, 0.0) / params.tau;

    const double window_gap = params.c * phi * phi * phi;  // Psi - x1 - W_hat
    return ShiftedDerivative{window_gap * loss_rate, 1.0 - (x.x2 + fp.s_hat) * loss_rate};
}

}  // namespace fluidcc
