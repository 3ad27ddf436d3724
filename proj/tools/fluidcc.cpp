#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "fluidcc/errors.hpp"
#include "fluidcc/experiment.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericError = 3;

struct Overrides {
    std::string config_path;
    std::string out_dir = "out";
    std::map<std::string, std::string> values;
    std::vector<std::string> raw;  // key=value pairs from --set
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "key = value configuration file");
    cmd->add_option("--out", o.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--set", o.raw, "override any key, as key=value");
    static const std::pair<const char*, const char*> flags[] = {
        {"--seed", "seed"},
        {"--algorithm", "algorithm"},
        {"--capacity", "capacity"},
        {"--packet-size", "packet_size"},
        {"--tau", "delay_tau"},
        {"--b", "b"},
        {"--c", "c"},
        {"--flows", "flows"},
        {"--init", "init"},
        {"--t-end", "t_end"},
        {"--step", "step"},
        {"--record-every", "record_every"},
        {"--sample-interval", "sample_interval"},
        {"--average-window", "average_window"},
        {"--coupling", "coupling"},
    };
    for (const auto& [flag, key] : flags) {
        cmd->add_option_function<std::string>(
            flag, [&o, key = std::string(key)](const std::string& v) { o.values[key] = v; },
            "sets " + std::string(key));
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fluid-model and Poisson-loss simulator for Reno and CUBIC"};
    app.require_subcommand(1);

    Overrides overrides;
    const std::pair<const char*, const char*> commands[] = {
        {"fluid", "integrate the delay-differential fluid model"},
        {"nhpl", "run the Poisson loss event simulator"},
        {"compare", "run both and compare post-transient windows"},
        {"stability", "report the Lyapunov stability quantities"},
        {"convergence", "check a trajectory against the convergence bound"},
        {"fixed-point", "print the fixed point"},
    };
    for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), overrides);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        fluidcc::ExperimentConfig config;
        if (!overrides.config_path.empty()) {
            config = fluidcc::ExperimentConfig::from_file(overrides.config_path);
        }
        config.mode = fluidcc::parse_mode(command);
        for (const auto& [key, value] : overrides.values) config.set(key, value);
        for (const auto& pair : overrides.raw) {
            const auto eq = pair.find('=');
            if (eq == std::string::npos) throw fluidcc::ConfigError("--set expects key=value");
            config.set(pair.substr(0, eq), pair.substr(eq + 1));
        }
        config.mode = fluidcc::parse_mode(command);

        const auto outcome = fluidcc::run_experiment(config, overrides.out_dir);
        std::cout << outcome.summary;
        return outcome.numeric_failure ? kNumericError : 0;
    } catch (const fluidcc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const fluidcc::DomainError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const fluidcc::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kNumericError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumericError;
    }
}
