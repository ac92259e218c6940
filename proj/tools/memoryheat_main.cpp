#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "memoryheat/runner.hpp"

using namespace memoryheat;

int main(int argc, char** argv) {
    CLI::App app{"memoryheat: Coleman-Gurtin heat conduction with memory under a "
                 "Beltrami conductivity"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string outdir;
    std::string axis;
    std::vector<double> sweep_values;

    auto add_common = [&](CLI::App* cmd, const char* default_out) {
        cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();
        cmd->add_option("--out", outdir, "output directory")->default_val(default_out);
    };

    CLI::App* cmd_run = app.add_subcommand("run", "integrate the scenario and emit diagnostics");
    add_common(cmd_run, "out-run");
    CLI::App* cmd_steady = app.add_subcommand("steady", "steady state z_f and its residual");
    add_common(cmd_steady, "out-steady");
    CLI::App* cmd_decomp =
        app.add_subcommand("decompose", "coupled L/K decomposition experiment");
    add_common(cmd_decomp, "out-decompose");
    CLI::App* cmd_beltrami =
        app.add_subcommand("beltrami", "Beurling/Beltrami resolvent property suite");
    add_common(cmd_beltrami, "out-beltrami");
    CLI::App* cmd_validate =
        app.add_subcommand("validate", "run all gates and validators without stepping");
    add_common(cmd_validate, "out-validate");
    CLI::App* cmd_sweep = app.add_subcommand("sweep", "run one trajectory per axis value");
    add_common(cmd_sweep, "out-sweep");
    cmd_sweep->add_option("--axis", axis, "scalar scenario key (dotted path)")->required();
    cmd_sweep->add_option("--values", sweep_values, "axis values")
        ->required()
        ->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        RunOutcome outcome;
        if (cmd_beltrami->parsed()) {
            outcome = run_beltrami(BeltramiScenario::load(scenario_path), outdir);
        } else {
            const Scenario sc = Scenario::load(scenario_path);
            if (cmd_run->parsed()) outcome = run_simulation(sc, outdir);
            else if (cmd_steady->parsed()) outcome = run_steady(sc, outdir);
            else if (cmd_decomp->parsed()) outcome = run_decompose(sc, outdir);
            else if (cmd_validate->parsed()) outcome = run_validate(sc, outdir);
            else if (cmd_sweep->parsed()) outcome = run_sweep(sc, axis, sweep_values, outdir);
        }
        std::fprintf(stdout, "%s\n", outcome.summary.dump(2).c_str());
        if (!outcome.ok()) {
            std::fprintf(stderr, "memoryheat: one or more assertions failed\n");
            return 1;
        }
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "memoryheat: configuration error: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "memoryheat: numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "memoryheat: %s\n", e.what());
        return 1;
    }
}
