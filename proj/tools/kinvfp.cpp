#include "commands.hpp"
#include "config.hpp"

#include "kinvfp/error.hpp"
#include "kinvfp/parallel.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace kinvfp;
using namespace kinvfp::cli;

namespace {

std::string usage_commands() {
    std::string s;
    for (const auto& n : command_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kinetic incompressible Fokker-Planck toolkit"};
    app.set_version_flag("--version", KINVFP_VERSION);
    std::string command, config_path;
    CommandOptions opt;
    std::vector<std::string> sets;
    app.add_option("command", command, "one of: " + usage_commands())->required();
    app.add_option("--config", config_path, "INI file, or a manifest.json whose configuration is reused");
    app.add_option("--out", opt.out, "run directory (default kinvfp_out)");
    app.add_option("--manifest", opt.manifest, "manifest for verify/report (default <out>/manifest.json)");
    app.add_option("--snapshot", opt.snapshot, "snapshot file for norms");
    app.add_option("--lambda", opt.lambda, "norm radius for norms (default lambda0)");
    app.add_option("--set", sets, "override section.key=value (repeatable)");

    std::map<std::string, std::string> flags;
    std::vector<std::pair<std::string, std::string>> flag_values;
    flag_values.reserve(config_keys().size());
    for (const auto& k : config_keys()) flag_values.emplace_back(k.key, std::string());
    for (std::size_t i = 0; i < config_keys().size(); ++i) {
        const auto& k = config_keys()[i];
        app.add_option("--" + k.key, flag_values[i].second, (k.section.empty() ? "" : "[" + k.section + "] ") + k.help)
            ->group("Configuration keys");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        for (std::size_t i = 0; i < config_keys().size(); ++i) {
            const auto& k = config_keys()[i];
            if (app.count("--" + k.key)) flags[k.key] = flag_values[i].second;
        }
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw InvalidInput("--set expects section.key=value, got '" + s + "'");
            flags[s.substr(0, eq)] = s.substr(eq + 1);
        }
        bool known = false;
        for (const auto& n : command_names()) known |= n == command;
        if (!known) throw InvalidInput("unknown command '" + command + "' (expected " + usage_commands() + ")");

        ConfigEcho file;
        if (!config_path.empty()) {
            const bool manifest = config_path.size() > 5 && config_path.substr(config_path.size() - 5) == ".json";
            file = manifest ? manifest_config(config_path) : read_ini(config_path);
        }
        const RunConfig cfg = build_config(file, flags);
        set_threads(resolve_threads(cfg.threads));
        return run_command(command, cfg, opt, std::cout);
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const AssertionFailure& e) {
        std::cerr << "assertion failure: " << e.what() << "\n";
        return 2;
    } catch (const NumericalAbort& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
