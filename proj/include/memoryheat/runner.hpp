#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "memoryheat/beltrami.hpp"
#include "memoryheat/scenario.hpp"

namespace memoryheat {

// Outcome of a CLI pipeline: the manifest carries the assertions; ok() is
// the exit-0 condition.
struct RunOutcome {
    std::filesystem::path outdir;
    json summary;
    bool assertions_passed = true;

    bool ok() const { return assertions_passed; }
};

RunOutcome run_simulation(const Scenario& sc, const std::filesystem::path& outdir);
RunOutcome run_steady(const Scenario& sc, const std::filesystem::path& outdir);
RunOutcome run_decompose(const Scenario& sc, const std::filesystem::path& outdir);
RunOutcome run_validate(const Scenario& sc, const std::filesystem::path& outdir);
RunOutcome run_sweep(const Scenario& sc, const std::string& axis,
                     const std::vector<double>& values, const std::filesystem::path& outdir);

// Beltrami property suite; the scenario document has its own schema
// (torus/mu/resolvent keys).
struct BeltramiScenario {
    json doc;
    std::string hash;
    int n = 64;
    double L = 1.0;
    json mu_spec;
    ResolventConfig cfg;

    static BeltramiScenario parse(const json& doc);
    static BeltramiScenario load(const std::filesystem::path& path);
};

RunOutcome run_beltrami(const BeltramiScenario& sc, const std::filesystem::path& outdir);

// Max worker threads for sweep members (MEMORYHEAT_THREADS, default 1).
int worker_threads();

} // namespace memoryheat
