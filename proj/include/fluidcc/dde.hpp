#pragma once

#include <cstddef>
#include <deque>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fluidcc/model.hpp"

namespace fluidcc {

// State on the delay interval, phi(theta) for theta in [-tau, 0].
class InitialHistory {
public:
    static InitialHistory constant(const FlowState& state);

    // Samples at strictly increasing theta values ending at 0; linear
    // interpolation between them.
    static InitialHistory sampled(std::vector<double> thetas, std::vector<FlowState> states);

    FlowState at(double theta) const;
    double earliest() const noexcept;
    bool is_constant() const noexcept { return thetas_.size() == 1; }

private:
    InitialHistory() = default;

    std::vector<double> thetas_;
    std::vector<FlowState> states_;
};

// Past states of one integration, retained over a sliding window of at least
// `retain_span` seconds. Queries between nodes use cubic Hermite
// interpolation with the stored slopes; queries outside [oldest, newest] are
// a programming error and throw std::logic_error.
class HistoryBuffer {
public:
    explicit HistoryBuffer(double retain_span);

    void push(double t, const FlowState& state, const Derivative& slope);
    FlowState at(double t) const;

    double oldest_time() const;
    double newest_time() const;
    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        double t;
        FlowState state;
        Derivative slope;
    };

    std::deque<Node> nodes_;
    double retain_span_;
};

struct TrajectorySample {
    double t = 0.0;
    double w_max = 0.0;
    double s = 0.0;
    double w = 0.0;
    double p = 0.0;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    SystemParams params;
    std::string algorithm;
    double step = 0.0;             // integration step h
    double record_interval = 0.0;  // spacing of samples
    bool halted = false;
    std::string diagnostic;  // why integration halted, if it did
};

struct IntegrationOptions {
    int record_every = 1;  // keep every n-th step
};

// Fixed-step RK4 over [0, t_end] by the method of steps. The step must divide
// tau into k >= 4 equal parts (0 < step <= tau / 4).
Trajectory integrate(const SystemParams& params, const WindowFunction& window_fn,
                     const InitialHistory& init, double t_end, double step,
                     const IntegrationOptions& options = {});

// Independent per-flow copies of the fluid model, integrated concurrently.
std::vector<Trajectory> integrate_flows(const SystemParams& params, const WindowFunction& window_fn,
                                        std::span<const InitialHistory> inits, double t_end,
                                        double step, const IntegrationOptions& options = {});

void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory);

struct OrderEstimate {
    double order = 0.0;        // log2(coarse_diff / fine_diff); NaN when both vanish
    double coarse_diff = 0.0;  // |W_h - W_{h/2}| at t_end
    double fine_diff = 0.0;    // |W_{h/2} - W_{h/4}| at t_end
};

// Self-convergence study on the endpoint window with steps h, h/2, h/4.
OrderEstimate convergence_order_check(const WindowFunction& window_fn, const SystemParams& params,
                                      const InitialHistory& init, double t_end, double base_step);

}  // namespace fluidcc
