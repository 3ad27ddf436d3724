#include "fluidcc/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "fluidcc/csv.hpp"
#include "fluidcc/dde.hpp"
#include "fluidcc/errors.hpp"
#include "fluidcc/stability.hpp"

namespace fluidcc {

namespace {

std::string trim(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = text.find_last_not_of(" \t\r\n");
    return text.substr(first, last - first + 1);
}

std::string lower(std::string text) {
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return text;
}

double to_number(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    double value = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size() || !std::isfinite(value)) {
        throw ConfigError("invalid number for " + key + ": '" + text + "'");
    }
    return value;
}

long long to_integer(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    long long value = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
        throw ConfigError("invalid integer for " + key + ": '" + text + "'");
    }
    return value;
}

std::pair<double, double> number_pair(const std::string& key, const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw ConfigError(key + " expects two comma-separated values");
    return {to_number(key, text.substr(0, comma)), to_number(key, text.substr(comma + 1))};
}

}  // namespace

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::Fluid: return "fluid";
        case Mode::Nhpl: return "nhpl";
        case Mode::Both: return "both";
        case Mode::Stability: return "stability";
        case Mode::Convergence: return "convergence";
        case Mode::FixedPointOnly: return "fixed-point";
    }
    return "fluid";
}

Mode parse_mode(const std::string& text) {
    const std::string m = lower(trim(text));
    if (m == "fluid") return Mode::Fluid;
    if (m == "nhpl") return Mode::Nhpl;
    if (m == "both" || m == "compare") return Mode::Both;
    if (m == "stability") return Mode::Stability;
    if (m == "convergence") return Mode::Convergence;
    if (m == "fixed-point" || m == "fixedpoint") return Mode::FixedPointOnly;
    throw ConfigError("unknown mode '" + text + "'");
}

double packets_to_bits_per_second(double packets_per_second, double packet_size_bytes) {
    return packets_per_second * packet_size_bytes * 8.0;
}

double bits_to_packets_per_second(double bits_per_second, double packet_size_bytes) {
    return bits_per_second / (packet_size_bytes * 8.0);
}

double parse_capacity(const std::string& text, double packet_size_bytes) {
    if (!(packet_size_bytes > 0.0)) throw ConfigError("packet_size must be positive");
    const std::string t = lower(trim(text));
    struct Suffix {
        const char* name;
        double bits;  // 0 marks packets per second
    };
    static constexpr Suffix suffixes[] = {
        {"gbps", 1e9}, {"mbps", 1e6}, {"kbps", 1e3}, {"bps", 1.0}, {"pps", 0.0},
    };
    for (const auto& s : suffixes) {
        const std::string suffix = s.name;
        if (t.size() > suffix.size() && t.compare(t.size() - suffix.size(), suffix.size(), suffix) == 0) {
            const double value = to_number("capacity", t.substr(0, t.size() - suffix.size()));
            if (s.bits == 0.0) return value;
            return bits_to_packets_per_second(value * s.bits, packet_size_bytes);
        }
    }
    return to_number("capacity", t);
}

InitSpec parse_init(const std::string& text) {
    const std::string t = lower(trim(text));
    if (t == "at-fixed-point") return InitSpec{};
    const std::string prefix = "offset-by:";
    if (t.rfind(prefix, 0) == 0) {
        const auto [dw, ds] = number_pair("init", t.substr(prefix.size()));
        return InitSpec{InitSpec::Kind::OffsetBy, dw, ds};
    }
    const auto [w, s] = number_pair("init", t);
    return InitSpec{InitSpec::Kind::Explicit, w, s};
}

void ExperimentConfig::set(const std::string& raw_key, const std::string& raw_value) {
    const std::string key = lower(trim(raw_key));
    const std::string value = trim(raw_value);
    if (key == "algorithm") {
        try {
            algorithm = parse_algorithm(value);
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
    } else if (key == "capacity") {
        capacity = value;
    } else if (key == "packet_size") {
        packet_size = to_number(key, value);
    } else if (key == "delay_tau" || key == "tau") {
        delay_tau = to_number(key, value);
    } else if (key == "b") {
        b = to_number(key, value);
    } else if (key == "c") {
        c = to_number(key, value);
    } else if (key == "flows") {
        flows = static_cast<int>(to_integer(key, value));
    } else if (key == "init") {
        init.clear();
        std::stringstream parts(value);
        std::string part;
        while (std::getline(parts, part, ';')) {
            if (!trim(part).empty()) init.push_back(parse_init(part));
        }
        if (init.empty()) throw ConfigError("init must not be empty");
    } else if (key == "t_end") {
        t_end = to_number(key, value);
    } else if (key == "step") {
        step = to_number(key, value);
    } else if (key == "seed") {
        const long long s = to_integer(key, value);
        if (s < 0) throw ConfigError("seed must be nonnegative");
        seed = static_cast<std::uint64_t>(s);
    } else if (key == "mode") {
        mode = parse_mode(value);
    } else if (key == "average_window") {
        average_window = to_number(key, value);
    } else if (key == "sample_interval") {
        sample_interval = to_number(key, value);
    } else if (key == "record_every") {
        record_every = static_cast<int>(to_integer(key, value));
    } else if (key == "coupling") {
        const std::string v = lower(value);
        if (v == "aggregate") {
            coupling = LossCoupling::Aggregate;
        } else if (v == "per-flow" || v == "perflow") {
            coupling = LossCoupling::PerFlow;
        } else {
            throw ConfigError("coupling must be aggregate or per-flow");
        }
    } else if (key == "epsilon_fraction") {
        epsilon_fraction = to_number(key, value);
    } else {
        throw ConfigError("unknown configuration key '" + raw_key + "'");
    }
}

ExperimentConfig ExperimentConfig::from_stream(std::istream& in) {
    ExperimentConfig config;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(number) + ": expected key = value");
        }
        config.set(line.substr(0, eq), line.substr(eq + 1));
    }
    return config;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return from_stream(in);
}

SystemParams ExperimentConfig::params() const {
    SystemParams p;
    p.capacity = parse_capacity(capacity, packet_size);
    p.tau = delay_tau;
    p.b = b;
    p.c = c;
    p.flows = flows;
    return p;
}

double ExperimentConfig::step_size() const { return step.value_or(delay_tau / 10.0); }

void ExperimentConfig::validate() const {
    try {
        params().validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
    const double h = step_size();
    const double ratio = delay_tau / h;
    const long long k = std::llround(ratio);
    if (!(h > 0.0) || k < 4 || std::fabs(static_cast<double>(k) - ratio) > 1e-9 * ratio) {
        throw ConfigError("step must divide delay_tau into at least 4 equal parts");
    }
    if (record_every < 1) throw ConfigError("record_every must be at least 1");
    if (mode == Mode::Convergence && k % record_every != 0) {
        throw ConfigError("convergence mode needs record_every to divide delay_tau / step");
    }
    if (!(average_window > 0.0 && average_window <= 1.0)) {
        throw ConfigError("average_window must lie in (0, 1]");
    }
    if (sample_interval < 0.0) throw ConfigError("sample_interval must be nonnegative");
    if (init.size() != 1 && init.size() != static_cast<std::size_t>(flows)) {
        throw ConfigError("init needs one entry or one per flow");
    }
    if ((mode == Mode::Stability || mode == Mode::Convergence) && algorithm != Algorithm::Cubic) {
        throw ConfigError("stability analysis applies to the cubic algorithm");
    }
    if (!(epsilon_fraction > 0.0)) throw ConfigError("epsilon_fraction must be positive");
}

FixedPoint fixed_point_for(Algorithm algorithm, const SystemParams& params) {
    return algorithm == Algorithm::Cubic ? cubic_fixed_point(params) : reno_fixed_point_state(params);
}

std::vector<FlowState> initial_states(const ExperimentConfig& config, const FixedPoint& fp) {
    std::vector<FlowState> out;
    for (int f = 0; f < config.flows; ++f) {
        const InitSpec& spec = config.init.size() == 1 ? config.init.front() : config.init[f];
        FlowState st = fp.state();
        if (spec.kind == InitSpec::Kind::OffsetBy) {
            st = FlowState{fp.w_hat + spec.w, fp.s_hat + spec.s};
        } else if (spec.kind == InitSpec::Kind::Explicit) {
            st = FlowState{spec.w, spec.s};
        }
        if (!(st.w_max > 0.0) || !(st.s >= 0.0)) {
            throw ConfigError("initial state needs w_max > 0 and s >= 0");
        }
        out.push_back(st);
    }
    return out;
}

namespace {

struct Report {
    std::ostringstream text;

    template <class T>
    void line(const std::string& key, const T& value) {
        text << key << ": ";
        write_fields(text, value);
        text << '\n';
    }
};

std::filesystem::path write_file(const std::filesystem::path& dir, const std::string& name,
                                 const std::function<void(std::ostream&)>& body) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    body(out);
    return path;
}

double fluid_mean(const std::vector<Trajectory>& trajs, double from) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& traj : trajs) {
        for (const auto& s : traj.samples) {
            if (s.t >= from) {
                sum += s.w;
                ++n;
            }
        }
    }
    return n > 0 ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

bool all_equal(const std::vector<FlowState>& states) {
    return std::all_of(states.begin(), states.end(), [&](const FlowState& s) {
        return s.w_max == states.front().w_max && s.s == states.front().s;
    });
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const std::filesystem::path& out_dir) {
    config.validate();
    std::filesystem::create_directories(out_dir);

    const SystemParams params = config.params();
    const WindowFunction window_fn = make_window_function(config.algorithm);
    const FixedPoint fp = fixed_point_for(config.algorithm, params);
    const double average_from = config.t_end * (1.0 - config.average_window);

    ExperimentOutcome outcome;
    Report report;
    report.line("mode", to_string(config.mode));
    report.line("algorithm", to_string(config.algorithm));
    report.line("capacity_pps", params.capacity);
    report.line("delay_tau", params.tau);
    report.line("b", params.b);
    report.line("c", params.c);
    report.line("flows", params.flows);
    report.line("seed", config.seed);
    report.line("w_hat", fp.w_hat);
    report.line("s_hat", fp.s_hat);
    report.line("p_hat", fp.p_hat);

    if (config.mode == Mode::Stability || config.mode == Mode::Convergence) {
        const ExpansionCoeffs k = expansion_coeffs(fp, params);
        const LyapunovParams lp = lyapunov_params(fp, params);
        const QtildeMatrix q = qtilde(k, lp, fp);
        report.line("alpha", k.alpha);
        report.line("beta", k.beta);
        report.line("gamma", k.gamma);
        report.line("delta", k.delta);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                report.line("qtilde_" + std::to_string(i) + std::to_string(j), q.m[i][j]);
            }
        }
        report.line("lambda_min", q.lambda_min);
        report.line("positive_definite", positive_definite_by_minors(q) ? "yes" : "no");
        report.line("d1", lp.d1);
        report.line("d4", lp.d4);
        report.line("eps0", lp.eps0);
        report.line("eps1", lp.eps1);
        report.line("k_margin", lp.k_margin);
        report.line("razumikhin_p", lp.razumikhin_p);
        const double epsilon = config.epsilon_fraction * fp.w_hat;
        report.line("epsilon", epsilon);
        report.line("basin_delta", basin_delta(epsilon, lp));

        if (config.mode == Mode::Convergence) {
            const auto states = initial_states(config, fp);
            const InitialHistory init = InitialHistory::constant(states.front());
            const Trajectory traj = integrate(params, window_fn, init, config.t_end,
                                              config.step_size(), {config.record_every});
            const auto samples = vdot_along(traj, init, fp, lp);
            outcome.files.push_back(write_file(out_dir, "convergence.csv", [&](std::ostream& os) {
                write_convergence_csv(os, samples, lp);
            }));
            std::size_t violations = 0;
            const double v0 = samples.empty() ? 0.0 : samples.front().v;
            for (const auto& s : samples) {
                const double n4 = std::pow(s.norm_x, 4);
                if (v0 > 0.0 && n4 > convergence_bound(s.t, v0, lp, lp.lambda_min)) ++violations;
            }
            report.line("samples", samples.size());
            report.line("bound_violations", violations);
            if (traj.halted) {
                report.line("halted", traj.diagnostic);
                outcome.numeric_failure = true;
            }
        }
    }

    if (config.mode == Mode::Fluid || config.mode == Mode::Both) {
        const auto states = initial_states(config, fp);
        const bool shared = all_equal(states);
        std::vector<InitialHistory> inits;
        for (std::size_t f = 0; f < (shared ? 1 : states.size()); ++f) {
            inits.push_back(InitialHistory::constant(states[f]));
        }
        const auto trajs = integrate_flows(params, window_fn, inits, config.t_end,
                                           config.step_size(), {config.record_every});
        for (std::size_t f = 0; f < trajs.size(); ++f) {
            const std::string name = shared ? "fluid.csv" : "fluid_" + std::to_string(f) + ".csv";
            outcome.files.push_back(write_file(out_dir, name, [&](std::ostream& os) {
                write_trajectory_csv(os, trajs[f]);
            }));
            if (trajs[f].halted) {
                report.line("fluid_halted", trajs[f].diagnostic);
                outcome.numeric_failure = true;
            }
        }
        const double mean = fluid_mean(trajs, average_from);
        report.line("fluid_mean_w", mean);
        report.line("fluid_rel_to_w_hat", mean / fp.w_hat - 1.0);
    }

    if (config.mode == Mode::Nhpl || config.mode == Mode::Both) {
        const auto states = initial_states(config, fp);
        SimOptions options;
        options.coupling = config.coupling;
        options.sample_interval =
            config.sample_interval > 0.0 ? config.sample_interval : config.t_end / 2000.0;
        const SimResult sim =
            run_simulation(params, window_fn, states, config.seed, config.t_end, options);
        outcome.files.push_back(write_file(out_dir, "events.csv", [&](std::ostream& os) {
            write_event_csv(os, sim.events);
        }));
        outcome.files.push_back(write_file(out_dir, "trace.csv", [&](std::ostream& os) {
            write_trace_csv(os, sim.trace);
        }));
        const auto losses = std::count_if(sim.events.begin(), sim.events.end(), [](const LossEvent& e) {
            return e.kind == LossEvent::Kind::Loss;
        });
        const double mean = trace_mean(sim.trace, average_from);
        report.line("nhpl_losses", static_cast<long long>(losses));
        report.line("nhpl_mean_w", mean);
        report.line("nhpl_rel_to_w_hat", mean / fp.w_hat - 1.0);
    }

    report.line("average_from", average_from);
    outcome.summary = report.text.str();
    outcome.files.push_back(write_file(out_dir, "summary.txt", [&](std::ostream& os) {
        os << outcome.summary;
    }));
    return outcome;
}

}  // namespace fluidcc
