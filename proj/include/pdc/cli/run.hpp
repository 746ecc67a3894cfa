#pragma once

#include <CLI11.hpp>

#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "pdc/cli/commands.hpp"
#include "pdc/errors.hpp"

namespace pdc::cli {

enum ExitStatus { exit_ok = 0, exit_usage = 1, exit_numerical = 2 };

inline std::string command_list()
{
    std::string s;
    for (const auto& [name, fn] : commands())
        s += (s.empty() ? "" : ", ") + name;
    return s;
}

// Runs an already-parsed scenario. Output goes to `out_path` if non-empty,
// otherwise to `out`.
inline int run(const Scenario& sc, const std::string& out_path, std::ostream& out, std::ostream& err)
{
    const auto it = commands().find(sc.command);
    if (it == commands().end()) {
        err << "error: unknown command '" << sc.command << "' (expected one of: " << command_list() << ")\n";
        return exit_usage;
    }
    CommandOutput result;
    try {
        result = it->second(sc);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }

    if (out_path.empty()) {
        result.table.write(out);
    } else {
        std::ofstream f(out_path);
        if (!f) {
            err << "error: key 'out': cannot write '" << out_path << "'\n";
            return exit_usage;
        }
        result.table.write(f);
    }
    if (sc.verbose)
        for (const auto& note : result.notes)
            err << "# " << note << '\n';
    if (result.status != 0)
        err << "numerical failure: " << result.diagnostic << '\n';
    return result.status;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Heralded PDC source simulation and analysis", "pdcsim"};
    std::string command, config, out_path;
    std::size_t grid_points = 0;
    bool verbose = false;
    app.add_option("command", command, "Subcommand: " + command_list())->required();
    app.add_option("--config", config, "Scenario file (key = value [unit])")->required();
    app.add_option("--out", out_path, "CSV output path (default: stdout)");
    app.add_option("--grid-points", grid_points, "Override spectral grid size per axis")->check(CLI::Range(16, 8192));
    app.add_flag("--verbose", verbose, "Print derived quantities to stderr");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }

    if (commands().count(command) == 0) {
        err << "error: unknown command '" << command << "' (expected one of: " << command_list() << ")\n";
        return exit_usage;
    }
    Scenario sc;
    try {
        sc = Scenario::load(config, command);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    if (grid_points)
        sc.grid_points = grid_points;
    sc.verbose = verbose;
    return run(sc, out_path, out, err);
}

} // namespace pdc::cli
