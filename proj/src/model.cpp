#include "fluidcc/model.hpp"

#include <cmath>
#include <utility>

#include "fluidcc/errors.hpp"

namespace fluidcc {

void SystemParams::validate() const {
    if (!(capacity > 0.0) || !std::isfinite(capacity)) {
        throw DomainError("capacity must be positive and finite");
    }
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw DomainError("delay tau must be positive and finite");
    }
    if (!(b > 0.0 && b < 1.0)) {
        throw DomainError("decrease factor b must lie in (0, 1)");
    }
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw DomainError("scaling factor c must be positive and finite");
    }
    if (flows < 1) {
        throw DomainError("flow count must be at least 1");
    }
}

WindowFunction::WindowFunction(std::string name, Evaluator evaluator)
    : name_(std::move(name)), evaluator_(std::move(evaluator)) {
    if (!evaluator_) {
        throw DomainError("window function requires an evaluator");
    }
}

FlowState WindowFunction::reset(double window_at_loss) const {
    if (!(window_at_loss > 0.0)) {
        throw DomainError("window at loss must be positive");
    }
    return FlowState{window_at_loss, 0.0};
}

double loss_probability(double window, const SystemParams& params) {
    if (!(window > 0.0)) {
        throw DomainError("loss probability needs a positive window");
    }
    // (W - C tau) / W is 1 - C tau / W without the cancellation near W = C tau.
    const double excess = window - params.bdp();
    return excess > 0.0 ? excess / window : 0.0;
}

Derivative fluid_rhs(const FlowState& current, double delayed_window, double delayed_p,
                     const SystemParams& params, const WindowFunction& window_fn) {
    if (!(delayed_window > 0.0)) {
        throw DomainError("delayed window must be positive");
    }
    if (!(delayed_p >= 0.0 && delayed_p <= 1.0)) {
        throw DomainError("delayed loss probability must lie in [0, 1]");
    }
    const double window = window_fn(current, params);
    const double loss_rate = delayed_window * delayed_p / params.tau;
    return Derivative{-(current.w_max - window) * loss_rate, 1.0 - current.s * loss_rate};
}

}  // namespace fluidcc
