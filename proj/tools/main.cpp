#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eakr/scenario.hpp"
#include "json.hpp"

namespace {

// Exit codes: 0 success, 2 configuration/schema, 3 unreachable destination,
// 4 fixpoint non-convergence, 1 anything else.
int emit_error(const char* category, const std::string& message, int code) {
    nlohmann::ordered_json err;
    err["error"] = nlohmann::ordered_json{{"category", category}, {"message", message}};
    std::cerr << err.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"key-predistributed sensor network: EAK routing, group keys, simulation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string format = "csv";
    std::uint64_t seed = 0;
    std::uint64_t trials = 0;
    std::uint64_t dest = 0;

    const struct {
        const char* name;
        const char* help;
    } commands[] = {
        {"generate", "emit the deployment graph"},
        {"eka", "run the EAK fixpoint and forwarder-list dispatch"},
        {"keys", "establish all forward- and backward-relay group keys"},
        {"routes", "construct query routes to a destination and deliver"},
        {"mc", "validate the expected-transmission formulas"},
        {"adversary", "run the derivation closure over configured compromised sets"},
        {"all", "full pipeline"},
    };
    for (const auto& cmd : commands) {
        CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
        sub->add_option("--config", config_path, "scenario config file (JSON)");
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--out", out_dir, "output directory (overrides config)");
        sub->add_option("--format", format, "report format")
            ->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--dest", dest, "destination node id (routes)");
        sub->add_option("--trials", trials, "Monte Carlo trial count");
        if (std::string(cmd.name) == "routes") {
            sub->add_option("destination", dest, "destination node id");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) return app.exit(e);
        return emit_error("config", e.what(), 2);
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string subcommand = sub->get_name();

    try {
        eakr::ScenarioConfig cfg;
        if (sub->count("--config") > 0) cfg = eakr::load_config(config_path);

        eakr::CliOverrides overrides;
        if (sub->count("--seed") > 0) overrides.seed = seed;
        if (sub->count("--out") > 0) overrides.out_dir = out_dir;
        if (sub->count("--format") > 0) overrides.format = format;
        if (sub->count("--trials") > 0) overrides.trials = trials;
        if (sub->count("--dest") > 0 ||
            (subcommand == "routes" && sub->count("destination") > 0)) {
            overrides.destination = static_cast<eakr::NodeId>(dest);
        }

        const eakr::ReportBundle bundle = eakr::run_scenario(cfg, subcommand, overrides);
        const std::string dir = overrides.out_dir.value_or(cfg.output_dir);
        eakr::write_bundle(bundle, dir);
        std::cout << "wrote " << bundle.files.size() << " files to " << dir << "\n";
        return 0;
    } catch (const eakr::ConfigError& e) {
        return emit_error("config", e.what(), 2);
    } catch (const eakr::UnreachableError& e) {
        return emit_error("unreachable", e.what(), 3);
    } catch (const eakr::ConvergenceError& e) {
        return emit_error("convergence", e.what(), 4);
    } catch (const std::exception& e) {
        return emit_error("internal", e.what(), 1);
    }
}
