#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "memoryheat/beltrami.hpp"
#include "memoryheat/diagnostics.hpp"
#include "memoryheat/runner.hpp"

namespace py = pybind11;
using namespace memoryheat;

namespace {

Grid make_grid(int nx, int ny, double Lx, double Ly) {
    Grid g{nx, ny, Lx, Ly};
    g.validate();
    return g;
}

BeltramiField mu_from_array(const py::array_t<std::complex<double>>& arr, double Lx, double Ly) {
    const auto buf = arr.request();
    if (buf.ndim != 2) throw ConfigError("mu", "expected a 2-d complex array of nodes");
    const int ny = static_cast<int>(buf.shape[0]) - 1;
    const int nx = static_cast<int>(buf.shape[1]) - 1;
    const Grid grid = make_grid(nx, ny, Lx, Ly);
    std::vector<std::complex<double>> vals(grid.node_count());
    const auto view = arr.unchecked<2>();
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) vals[grid.node_index(i, j)] = view(j, i);
    return make_beltrami_field(grid, std::move(vals));
}

GridFunction field_from_array(const py::array_t<double>& arr, const Grid& grid) {
    const auto buf = arr.request();
    if (buf.ndim != 2 || buf.shape[0] != grid.niy() || buf.shape[1] != grid.nix())
        throw ConfigError("field", "expected an (ny-1, nx-1) interior array");
    GridFunction u(grid);
    const auto view = arr.unchecked<2>();
    for (int j = 1; j <= grid.niy(); ++j)
        for (int i = 1; i <= grid.nix(); ++i) u.at(i, j) = view(j - 1, i - 1);
    return u;
}

py::array_t<double> field_to_array(const GridFunction& u) {
    py::array_t<double> out({u.grid.niy(), u.grid.nix()});
    auto view = out.mutable_unchecked<2>();
    for (int j = 1; j <= u.grid.niy(); ++j)
        for (int i = 1; i <= u.grid.nix(); ++i) view(j - 1, i - 1) = u.at(i, j);
    return out;
}

SpectralField spectral_from_array(const py::array_t<std::complex<double>>& arr, double L) {
    const auto buf = arr.request();
    if (buf.ndim != 2 || buf.shape[0] != buf.shape[1])
        throw ConfigError("field", "expected a square complex array");
    Torus t{static_cast<int>(buf.shape[0]), L};
    SpectralField f(t);
    const auto view = arr.unchecked<2>();
    for (int j = 0; j < t.n; ++j)
        for (int i = 0; i < t.n; ++i) f.v[t.index(i, j)] = view(j, i);
    return f;
}

py::array_t<std::complex<double>> spectral_to_array(const SpectralField& f) {
    py::array_t<std::complex<double>> out({f.torus.n, f.torus.n});
    auto view = out.mutable_unchecked<2>();
    for (int j = 0; j < f.torus.n; ++j)
        for (int i = 0; i < f.torus.n; ++i) view(j, i) = f.v[f.torus.index(i, j)];
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Coleman-Gurtin heat conduction with memory under a Beltrami conductivity";
    m.attr("__version__") = kToolVersion;

    py::register_exception<ConfigError>(m, "ScenarioError");
    py::register_exception<NumericError>(m, "NumericsError");

    m.def(
        "conductivity",
        [](const py::array_t<std::complex<double>>& mu, double Lx, double Ly) {
            const BeltramiField field = mu_from_array(mu, Lx, Ly);
            const ConductivityTensor sigma = conductivity_from_beltrami(field);
            const int rows = field.grid.ny + 1, cols = field.grid.nx + 1;
            auto pack = [&](const std::vector<double>& v) {
                py::array_t<double> out({rows, cols});
                auto view = out.mutable_unchecked<2>();
                for (int j = 0; j < rows; ++j)
                    for (int i = 0; i < cols; ++i) view(j, i) = v[field.grid.node_index(i, j)];
                return out;
            };
            py::dict d;
            d["a11"] = pack(sigma.a11);
            d["a12"] = pack(sigma.a12);
            d["a22"] = pack(sigma.a22);
            d["m_k"] = sigma.m_k;
            d["M_k"] = sigma.M_k;
            d["k_bound"] = sigma.k_bound;
            return d;
        },
        py::arg("mu"), py::arg("Lx") = 1.0, py::arg("Ly") = 1.0,
        "sigma_mu entries and ellipticity bounds from a nodal Beltrami coefficient");

    m.def(
        "ellipticity_report",
        [](const py::array_t<std::complex<double>>& mu, double Lx, double Ly) {
            const EllipticityReport r =
                ellipticity_report(conductivity_from_beltrami(mu_from_array(mu, Lx, Ly)));
            return py::make_tuple(r.min_eig, r.max_eig, r.max_det_error);
        },
        py::arg("mu"), py::arg("Lx") = 1.0, py::arg("Ly") = 1.0);

    m.def(
        "solve_dirichlet",
        [](const py::array_t<std::complex<double>>& mu, const py::array_t<double>& rhs,
           double Lx, double Ly, double tol) {
            const BeltramiField field = mu_from_array(mu, Lx, Ly);
            const DiscreteOperator A = assemble(conductivity_from_beltrami(field), field.grid);
            const GridFunction g = field_from_array(rhs, field.grid);
            return field_to_array(solve(A, g, tol));
        },
        py::arg("mu"), py::arg("rhs"), py::arg("Lx") = 1.0, py::arg("Ly") = 1.0,
        py::arg("tol") = 1e-10, "solve A_mu u = rhs with homogeneous Dirichlet conditions");

    m.def(
        "apply_operator",
        [](const py::array_t<std::complex<double>>& mu, const py::array_t<double>& u,
           double Lx, double Ly) {
            const BeltramiField field = mu_from_array(mu, Lx, Ly);
            const DiscreteOperator A = assemble(conductivity_from_beltrami(field), field.grid);
            return field_to_array(A.apply(field_from_array(u, field.grid)));
        },
        py::arg("mu"), py::arg("u"), py::arg("Lx") = 1.0, py::arg("Ly") = 1.0);

    m.def(
        "smallest_eigenvalue",
        [](const py::array_t<std::complex<double>>& mu, double Lx, double Ly, double tol) {
            const BeltramiField field = mu_from_array(mu, Lx, Ly);
            const DiscreteOperator A = assemble(conductivity_from_beltrami(field), field.grid);
            return smallest_eigenvalue(A, tol);
        },
        py::arg("mu"), py::arg("Lx") = 1.0, py::arg("Ly") = 1.0, py::arg("tol") = 1e-10);

    m.def(
        "validate_kernel_exp_sum",
        [](const std::vector<std::pair<double, double>>& modes) {
            std::vector<MemoryKernel::Mode> ms;
            for (const auto& [b, a] : modes) ms.push_back({b, a});
            const MemoryKernel k = MemoryKernel::from_exponential_sum(ms);
            const KernelReport r = validate_kernel(k);
            py::dict d;
            d["K1_ok"] = r.k1_ok;
            d["K2_ok"] = r.k2_ok;
            d["normalization_error"] = r.normalization_error;
            d["theta_min"] = r.theta_min;
            d["theta"] = k.theta();
            d["kappa0"] = k.kappa0();
            return d;
        },
        py::arg("modes"), "(K1)/(K2) validation report for an exponential-sum kernel");

    m.def(
        "beurling",
        [](const py::array_t<std::complex<double>>& f, double L) {
            return spectral_to_array(beurling(spectral_from_array(f, L)));
        },
        py::arg("field"), py::arg("L") = 1.0,
        "Beurling transform (Fourier multiplier conj(xi)/xi) of a zero-mean field");

    m.def(
        "neumann_resolvent",
        [](const py::array_t<std::complex<double>>& mu,
           const py::array_t<std::complex<double>>& phi, double L, double tol, int max_iter) {
            const SpectralField mu_f = spectral_from_array(mu, L);
            ResolventConfig cfg;
            for (const auto& z : mu_f.v) cfg.k = std::max(cfg.k, std::abs(z));
            cfg.tol = tol;
            cfg.max_iter = max_iter;
            const ResolventResult r =
                neumann_resolvent(mu_f, spectral_from_array(phi, L), cfg);
            py::dict d;
            d["g"] = spectral_to_array(r.g);
            d["iterations"] = r.iterations;
            d["residual"] = r.final_residual;
            d["contraction_ratio"] = r.contraction_ratio;
            return d;
        },
        py::arg("mu"), py::arg("phi"), py::arg("L") = 1.0, py::arg("tol") = 1e-12,
        py::arg("max_iter") = 800, "Neumann iteration for (I - mu S) g = phi");

    m.def(
        "solve_beltrami",
        [](const py::array_t<std::complex<double>>& mu,
           const py::array_t<std::complex<double>>& src, double L, double tol, int max_iter) {
            const SpectralField mu_f = spectral_from_array(mu, L);
            ResolventConfig cfg;
            for (const auto& z : mu_f.v) cfg.k = std::max(cfg.k, std::abs(z));
            cfg.tol = tol;
            cfg.max_iter = max_iter;
            const BeltramiSolveResult r =
                solve_beltrami(mu_f, spectral_from_array(src, L), cfg);
            py::dict d;
            d["f"] = spectral_to_array(r.f);
            d["residual"] = r.residual;
            d["defect"] = r.defect;
            d["iterations"] = r.iterations;
            return d;
        },
        py::arg("mu"), py::arg("src"), py::arg("L") = 1.0, py::arg("tol") = 1e-12,
        py::arg("max_iter") = 800, "solve dbar f = mu d f + src on the torus");

    m.def(
        "run_scenario_json",
        [](const std::string& scenario_json, const std::string& outdir,
           const std::string& mode) {
            const json doc = json::parse(scenario_json);
            RunOutcome out;
            if (mode == "run")
                out = run_simulation(Scenario::parse(doc), outdir);
            else if (mode == "steady")
                out = run_steady(Scenario::parse(doc), outdir);
            else if (mode == "decompose")
                out = run_decompose(Scenario::parse(doc), outdir);
            else if (mode == "validate")
                out = run_validate(Scenario::parse(doc), outdir);
            else if (mode == "beltrami")
                out = run_beltrami(BeltramiScenario::parse(doc), outdir);
            else
                throw ConfigError("mode", "expected run/steady/decompose/validate/beltrami");
            py::dict d;
            d["summary_json"] = out.summary.dump();
            d["ok"] = out.ok();
            d["outdir"] = out.outdir.string();
            return d;
        },
        py::arg("scenario_json"), py::arg("outdir"), py::arg("mode") = "run",
        "execute a scenario document; returns the summary and assertion status");

    m.def("scenario_hash", [](const std::string& scenario_json) {
        return canonical_hash(json::parse(scenario_json));
    });
}
