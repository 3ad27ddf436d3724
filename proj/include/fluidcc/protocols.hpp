#pragma once

#include <string>
#include <string_view>

#include "fluidcc/fixed_point.hpp"
#include "fluidcc/model.hpp"

namespace fluidcc {

enum class Algorithm { Reno, Cubic };

std::string to_string(Algorithm algorithm);
// Accepts "reno" or "cubic" (case-insensitive); throws DomainError otherwise.
Algorithm parse_algorithm(std::string_view text);

// W = W_max / 2 + s / tau
struct RenoWindow {
    double operator()(const FlowState& state, const SystemParams& params) const;
};

// W = c (s - cbrt(W_max b / c))^3 + W_max
struct CubicWindow {
    double operator()(const FlowState& state, const SystemParams& params) const;
};

double reno_window(const FlowState& state, const SystemParams& params);
double cubic_window(const FlowState& state, const SystemParams& params);

WindowFunction make_window_function(Algorithm algorithm);

// Epoch boundary: the pre-loss window becomes W_max and s restarts at zero.
FlowState loss_reset(double window_at_loss, Algorithm algorithm);

// CUBIC state relative to its fixed point: x1 = W_max - W_hat, x2 = s - s_hat.
struct ShiftedState {
    double x1 = 0.0;  // packets
    double x2 = 0.0;  // seconds
};

ShiftedState to_shifted(const FlowState& state, const FixedPoint& fp) noexcept;
FlowState from_shifted(const ShiftedState& x, const FixedPoint& fp) noexcept;

struct ShiftedDerivative {
    double dx1 = 0.0;
    double dx2 = 0.0;
};

// Shifted CUBIC system. Evaluates Psi (the window in shifted coordinates)
// and the clamped loss probability at the delayed state. Throws DomainError
// when x1 or the delayed x1 is at or below -W_hat.
ShiftedDerivative cubic_shifted_rhs(const ShiftedState& x, const ShiftedState& x_delayed,
                                    const FixedPoint& fp, const SystemParams& params);

}  // namespace fluidcc
