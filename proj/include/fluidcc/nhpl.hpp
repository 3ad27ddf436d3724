#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fluidcc/model.hpp"

namespace fluidcc {

// Seeded uniform(0, 1) source: mt19937_64 with the top 53 bits mapped to
// ((x >> 11) + 0.5) / 2^53, so 0 and 1 are never produced.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }
    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

using RateFunction = std::function<double(double)>;

struct QuadratureOptions {
    double panel = 0.0;          // panel width; 0 means horizon / 64
    double tolerance = 1e-9;     // on the integral value
};

// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance tol.
double adaptive_simpson(const RateFunction& f, double a, double b, double tol);

// Smallest T in [0, horizon] with integral_0^T rate = -ln u, or nullopt if
// the integral stays below -ln u over the horizon. The rate is a function of
// the offset from the start. Throws DomainError unless 0 < u < 1.
std::optional<double> inverse_transform_T(const RateFunction& rate, double u, double horizon,
                                          const QuadratureOptions& options = {});

// Picks flow f with probability W_f / sum(W). Throws DomainError if every
// window is zero or any is negative.
std::size_t pick_losing_flow(std::span<const double> windows, double u);

// How the loss probability of a flow is derived under several flows.
enum class LossCoupling {
    Aggregate,  // p = max(1 - N C tau / sum W, 0) shared by every flow
    PerFlow,    // p_f = max(1 - C tau / W_f, 0)
};

struct PendingIndication {
    double time = 0.0;
    std::size_t flow = 0;
    bool operator>(const PendingIndication& other) const noexcept {
        return time != other.time ? time > other.time : flow > other.flow;
    }
};

// Pending loss indications and the loss-indication bookkeeping.
struct LossSchedule {
    std::priority_queue<PendingIndication, std::vector<PendingIndication>,
                        std::greater<PendingIndication>>
        pending;
    std::vector<double> llis;  // last loss indication time per flow
    double glli = 0.0;         // most recent loss indication over all flows
    double last_loss = 0.0;    // T_l, most recent loss at the congestion point

    double next_indication() const noexcept;
};

struct LossEvent {
    enum class Kind { Loss, Indication };
    Kind kind = Kind::Loss;
    double time = 0.0;
    std::size_t flow = 0;
    double window_before = 0.0;
    double window_after = 0.0;
};

struct TracePoint {
    double t = 0.0;
    std::vector<double> windows;
    double mean = 0.0;
};

struct SimOptions {
    LossCoupling coupling = LossCoupling::Aggregate;
    double horizon = 0.0;          // lookahead; 0 means 1e4 tau
    double sample_interval = 0.0;  // trace spacing; 0 disables the trace
    QuadratureOptions quadrature;
};

struct SimState {
    SimState(const SystemParams& params, WindowFunction window_fn,
             std::span<const FlowState> init, std::uint64_t seed, SimOptions options = {});

    // Window of flow f at absolute time t under its current epoch.
    double window(std::size_t flow, double t) const;
    double total_window(double t) const;
    // Aggregate loss rate sum_f W_f p_f / tau at absolute time t.
    double loss_rate(double t) const;

    // Emits trace samples strictly before t using the current epochs.
    void record_until(double t);
    // Applies the earliest pending indication: its flow starts a new epoch.
    void apply_next_indication();

    SystemParams params;
    WindowFunction window_fn;
    SimOptions options;
    std::vector<double> w_loss;  // window just before each flow's last loss
    LossSchedule schedule;
    RngStream rng;
    std::vector<LossEvent> events;
    std::vector<TracePoint> trace;
    double next_sample = 0.0;
    double t_stop = 0.0;
};

// Smallest t in [now, limit] with sum W_f(t) >= N C tau; now if already
// there; +inf if not reached by limit.
double t_bdp(const SimState& state, double now, double limit);

// Loss time solving sum_f integral_{t0}^{t0+T} W_f p_f / tau = -ln u, with
// the integral taken no further than limit. nullopt if it does not reach
// -ln u by then.
std::optional<double> compute_T(const SimState& state, double t0, double u, double limit);

enum class GenerateStatus { Scheduled, NoLossInHorizon, PastEnd };

struct GenerateResult {
    GenerateStatus status = GenerateStatus::PastEnd;
    double loss_time = 0.0;   // when Scheduled
    std::size_t flow = 0;     // losing flow when Scheduled
    double resume_at = 0.0;   // when NoLossInHorizon
    int regenerations = 0;    // while-loop iterations
};

// One loss generation at the congestion point: regenerates the candidate
// while it falls at or after the next pending indication, consuming that
// indication each time; then schedules the loss and its indication at
// loss time + tau.
GenerateResult generate_poi_loss(SimState& state);

struct SimResult {
    std::vector<LossEvent> events;
    std::vector<TracePoint> trace;
    std::uint64_t seed = 0;
};

// Runs the event simulation over [0, t_end]. Each flow starts from its
// (W_loss, s) pair, i.e. its last loss indication was s seconds ago.
SimResult run_simulation(const SystemParams& params, const WindowFunction& window_fn,
                         std::span<const FlowState> init, std::uint64_t seed, double t_end,
                         const SimOptions& options = {});

// Mean over flows of the trace, averaged over samples with t >= from.
double trace_mean(const std::vector<TracePoint>& trace, double from);

void write_event_csv(std::ostream& os, const std::vector<LossEvent>& events);
// Rows t,flow,w per flow plus flow = -1 for the mean.
void write_trace_csv(std::ostream& os, const std::vector<TracePoint>& trace);

}  // namespace fluidcc
