#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fluidcc/fixed_point.hpp"
#include "fluidcc/model.hpp"
#include "fluidcc/nhpl.hpp"
#include "fluidcc/protocols.hpp"

namespace fluidcc {

// Bad or inconsistent configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Mode { Fluid, Nhpl, Both, Stability, Convergence, FixedPointOnly };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

// "125000" and "125000pps" are packets per second; "1Gbps", "100Mbps",
// "64kbps", "8e6bps" are bits per second converted with the packet size.
double parse_capacity(const std::string& text, double packet_size_bytes);
double packets_to_bits_per_second(double packets_per_second, double packet_size_bytes);
double bits_to_packets_per_second(double bits_per_second, double packet_size_bytes);

// Initial condition for one flow.
struct InitSpec {
    enum class Kind { AtFixedPoint, OffsetBy, Explicit };
    Kind kind = Kind::AtFixedPoint;
    double w = 0.0;  // W_max, or its offset
    double s = 0.0;  // s, or its offset
};

// Parses "at-fixed-point", "offset-by:dw,ds" or "w,s".
InitSpec parse_init(const std::string& text);

struct ExperimentConfig {
    Algorithm algorithm = Algorithm::Cubic;
    std::string capacity = "125000";
    double packet_size = 1000.0;  // bytes
    double delay_tau = 0.001;
    double b = 0.2;
    double c = 0.4;
    int flows = 1;
    std::vector<InitSpec> init{InitSpec{}};  // one entry for all flows, or one per flow
    double t_end = 20.0;
    std::optional<double> step;  // default tau / 10
    std::uint64_t seed = 1;
    Mode mode = Mode::Fluid;
    double average_window = 0.5;   // trailing fraction of the horizon used for means
    double sample_interval = 0.0;  // NHPL trace spacing; default t_end / 2000
    int record_every = 1;          // fluid output thinning
    LossCoupling coupling = LossCoupling::Aggregate;
    double epsilon_fraction = 0.01;  // basin target radius as a fraction of W_hat

    // Applies one key = value pair; throws ConfigError on unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
    static ExperimentConfig from_stream(std::istream& in);
    static ExperimentConfig from_file(const std::filesystem::path& path);

    SystemParams params() const;
    double step_size() const;
    // Throws ConfigError if fields disagree.
    void validate() const;
};

FixedPoint fixed_point_for(Algorithm algorithm, const SystemParams& params);

// Initial (W_max, s) of every flow.
std::vector<FlowState> initial_states(const ExperimentConfig& config, const FixedPoint& fp);

struct ExperimentOutcome {
    std::vector<std::filesystem::path> files;
    std::string summary;
    bool numeric_failure = false;
};

// Runs the configured mode, writing CSVs and summary.txt into out_dir.
ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const std::filesystem::path& out_dir);

}  // namespace fluidcc
