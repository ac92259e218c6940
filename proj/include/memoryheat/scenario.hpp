#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "memoryheat/conductivity.hpp"
#include "memoryheat/dynamics.hpp"
#include "memoryheat/history.hpp"
#include "memoryheat/kernel.hpp"
#include "memoryheat/nonlinearity.hpp"
#include "memoryheat/output.hpp"

namespace memoryheat {

// Parsed scenario document. Parsing is strict: unknown keys and malformed
// variants raise ConfigError with the offending key path (CLI exit 2).
struct Scenario {
    json doc; // original document (hashing, sweeps)
    std::string hash;

    Grid grid;
    json mu_spec;
    json kernel_spec;
    json phi_spec;
    json forcing_spec;
    json u0_spec;
    json past_spec;

    double dt = 1e-3;
    double T_final = 1.0;
    long sample_every = 1;
    std::uint64_t seed = 0;
    std::optional<double> nu;
    HistoryRepr repr = HistoryRepr::Both;
    std::optional<int> nodes_per_decade;
    double cg_tol = 1e-10;

    static Scenario parse(const json& doc);
    static Scenario load(const std::filesystem::path& path);
};

// Everything a run needs, assembled from a Scenario.
struct ScenarioObjects {
    Grid grid;
    BeltramiField mu;
    ConductivityTensor sigma;
    DiscreteOperator A;
    DiscreteOperator A_laplace; // sigma = I on the same grid (gates, bounds)
    std::shared_ptr<const MemoryKernel> kernel;
    std::shared_ptr<const SQuadrature> quad;
    Nonlinearity phi;
    GridFunction forcing;
    GridFunction u0;
    PastHistory past;
    double nu = 0.25;
    double lambda1_laplace = 0.0; // smallest discrete eigenvalue of -Delta
    double lambda_lower = 0.0;    // m(k) * lambda1_laplace

    StepContext step_context() const;
    SystemState initial_state(double dt, HistoryRepr repr) const;
};

ScenarioObjects build_scenario(const Scenario& sc, bool need_eigen_gate = true);

// Real scalar field from a field spec (shared by forcing/u0/past profiles).
GridFunction parse_field(const json& spec, const std::string& path, const Grid& grid,
                         const DiscreteOperator* A, std::uint64_t seed);

BeltramiField parse_mu(const json& spec, const std::string& path, const Grid& grid);
std::shared_ptr<const MemoryKernel> parse_kernel(const json& spec, const std::string& path);
Nonlinearity parse_phi(const json& spec, const std::string& path);
PastHistory parse_past(const json& spec, const std::string& path, const Grid& grid,
                       const DiscreteOperator* A, std::uint64_t seed);

} // namespace memoryheat
