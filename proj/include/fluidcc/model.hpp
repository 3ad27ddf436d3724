#pragma once

#include <functional>
#include <string>

namespace fluidcc {

// Global parameter record. Units are packets and seconds throughout.
struct SystemParams {
    double capacity = 0.0;  // per-flow capacity C, packets per second
    double tau = 0.0;       // delay, seconds
    double b = 0.2;         // multiplicative decrease factor, (0, 1)
    double c = 0.4;         // CUBIC scaling, packets per second^3
    int flows = 1;

    // C * tau, the per-flow bandwidth-delay product in packets.
    double bdp() const noexcept { return capacity * tau; }

    // Throws DomainError if any invariant is violated.
    void validate() const;
};

// (W_max, s): window just before the last loss, and time since that loss.
struct FlowState {
    double w_max = 0.0;
    double s = 0.0;
};

struct Derivative {
    double d_w_max = 0.0;  // packets per second
    double d_s = 0.0;      // dimensionless
};

// Maps a flow state to its congestion window. The loss-reset rule is common
// to every loss-based controller: W_max takes the pre-loss window and s
// restarts at zero; the post-loss window then follows from the evaluator.
class WindowFunction {
public:
    using Evaluator = std::function<double(const FlowState&, const SystemParams&)>;

    WindowFunction(std::string name, Evaluator evaluator);

    double operator()(const FlowState& state, const SystemParams& params) const {
        return evaluator_(state, params);
    }

    FlowState reset(double window_at_loss) const;

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
    Evaluator evaluator_;
};

// p = max(1 - C*tau / W, 0). Throws DomainError for W <= 0.
double loss_probability(double window, const SystemParams& params);

// Right-hand side of the (W_max, s) fluid model given the current state and
// the window / loss probability observed one delay earlier.
Derivative fluid_rhs(const FlowState& current, double delayed_window, double delayed_p,
                     const SystemParams& params, const WindowFunction& window_fn);

}  // namespace fluidcc
