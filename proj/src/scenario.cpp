#include "memoryheat/scenario.hpp"

#include <fstream>

#include "memoryheat/diagnostics.hpp"
#include "memoryheat/rng.hpp"

namespace memoryheat {

namespace {

void require_keys(const json& obj, const std::string& path,
                  std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(path, "expected an object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw ConfigError(path + "." + key, "unknown key");
    }
}

double require_number(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) throw ConfigError(path + "." + key, "missing");
    if (!obj[key].is_number()) throw ConfigError(path + "." + key, "expected a number");
    return obj[key].get<double>();
}

double number_or(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    return obj[key].get<double>();
}

// The scenario variant objects carry exactly one of the listed keys; bare
// strings select parameter-free variants ("zero").
std::string variant_key(const json& obj, const std::string& path,
                        std::initializer_list<const char*> variants) {
    std::string key;
    if (obj.is_string())
        key = obj.get<std::string>();
    else if (obj.is_object() && obj.size() == 1)
        key = obj.begin().key();
    else
        throw ConfigError(path, "expected a variant string or single-key object");
    for (const char* v : variants)
        if (key == v) return key;
    throw ConfigError(path + "." + key, "unknown variant");
}

const json& payload(const json& spec, const std::string& path, const char* key) {
    if (!spec.is_object() || !spec.contains(key))
        throw ConfigError(path + "." + key, "variant needs a parameter value");
    return spec[key];
}

} // namespace

GridFunction parse_field(const json& spec, const std::string& path, const Grid& grid,
                         const DiscreteOperator* A, std::uint64_t seed) {
    const std::string kind =
        variant_key(spec, path, {"zero", "constant", "mode", "random", "file"});
    if (kind == "zero") return GridFunction(grid);
    if (kind == "constant") {
        const double c = payload(spec, path, "constant").get<double>();
        return GridFunction(grid, c);
    }
    if (kind == "mode") {
        const json& m = payload(spec, path, "mode");
        require_keys(m, path + ".mode", {"kx", "ky", "amplitude"});
        const int kx = m.value("kx", 1);
        const int ky = m.value("ky", 1);
        const double amp = number_or(m, "amplitude", 1.0);
        GridFunction u(grid);
        for (int j = 1; j <= grid.niy(); ++j)
            for (int i = 1; i <= grid.nix(); ++i)
                u.at(i, j) = amp * std::sin(kx * M_PI * grid.x(i) / grid.Lx) *
                             std::sin(ky * M_PI * grid.y(j) / grid.Ly);
        return u;
    }
    if (kind == "random") {
        const json& r = payload(spec, path, "random");
        require_keys(r, path + ".random", {"amplitude", "norm", "radius"});
        Rng rng(seed);
        GridFunction u = random_field(grid, rng, number_or(r, "amplitude", 1.0));
        if (r.contains("norm")) {
            const std::string norm = r["norm"].get<std::string>();
            double cur = 0.0;
            if (norm == "V0" || norm == "H0") {
                cur = norm_l2(u);
            } else if (norm == "V1") {
                if (!A) throw ConfigError(path + ".random.norm", "V1 needs the operator");
                cur = v_norm(*A, u, 1);
            } else if (norm != "none") {
                throw ConfigError(path + ".random.norm", "expected V0, V1, H0 or none");
            }
            const double radius = number_or(r, "radius", 1.0);
            if (cur > 0.0) u *= radius / cur;
        }
        return u;
    }
    // file
    return read_snapshot(grid, payload(spec, path, "file").get<std::string>());
}

BeltramiField parse_mu(const json& spec, const std::string& path, const Grid& grid) {
    const std::string kind =
        variant_key(spec, path, {"constant", "checkerboard", "radial", "file"});
    if (kind == "constant") {
        const json& c = payload(spec, path, "constant");
        if (!c.is_array() || c.size() != 2)
            throw ConfigError(path + ".constant", "expected [re, im]");
        return beltrami_constant(grid, {c[0].get<double>(), c[1].get<double>()});
    }
    if (kind == "checkerboard") {
        const json& c = payload(spec, path, "checkerboard");
        require_keys(c, path + ".checkerboard", {"k", "tiles"});
        return beltrami_checkerboard(grid, require_number(c, path + ".checkerboard", "k"),
                                     c.value("tiles", 8));
    }
    if (kind == "radial") {
        const json& c = payload(spec, path, "radial");
        require_keys(c, path + ".radial", {"k"});
        return beltrami_radial(grid, require_number(c, path + ".radial", "k"));
    }
    // file: interleaved re/im float64 over all (nx+1)(ny+1) nodes, row-major,
    // with a {nx, ny} JSON sidecar.
    const std::string file = payload(spec, path, "file").get<std::string>();
    std::ifstream side(file + ".json");
    if (!side) throw ConfigError(path + ".file", "missing sidecar " + file + ".json");
    json meta = json::parse(side);
    if (meta.value("nx", -1) != grid.nx || meta.value("ny", -1) != grid.ny)
        throw ConfigError(path + ".file", "sidecar grid does not match the scenario grid");
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError(path + ".file", "cannot open " + file);
    std::vector<std::complex<double>> vals(grid.node_count());
    in.read(reinterpret_cast<char*>(vals.data()),
            static_cast<std::streamsize>(vals.size() * sizeof(std::complex<double>)));
    if (static_cast<std::size_t>(in.gcount()) != vals.size() * sizeof(std::complex<double>))
        throw ConfigError(path + ".file", "file shorter than (nx+1)*(ny+1) complex values");
    return make_beltrami_field(grid, std::move(vals));
}

std::shared_ptr<const MemoryKernel> parse_kernel(const json& spec, const std::string& path) {
    const std::string kind = variant_key(spec, path, {"exp_sum", "sampled"});
    if (kind == "exp_sum") {
        const json& arr = payload(spec, path, "exp_sum");
        if (!arr.is_array() || arr.empty())
            throw ConfigError(path + ".exp_sum", "expected a nonempty [[b,a],...] array");
        std::vector<MemoryKernel::Mode> modes;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const json& m = arr[i];
            if (!m.is_array() || m.size() != 2)
                throw ConfigError(path + ".exp_sum[" + std::to_string(i) + "]",
                                  "expected [b, a]");
            modes.push_back({m[0].get<double>(), m[1].get<double>()});
        }
        return std::make_shared<MemoryKernel>(MemoryKernel::from_exponential_sum(modes));
    }
    const json& s = payload(spec, path, "sampled");
    require_keys(s, path + ".sampled", {"file", "rescale"});
    if (!s.contains("file")) throw ConfigError(path + ".sampled.file", "missing");
    return std::make_shared<MemoryKernel>(
        MemoryKernel::from_csv(s["file"].get<std::string>(), s.value("rescale", false)));
}

Nonlinearity parse_phi(const json& spec, const std::string& path) {
    const std::string kind = variant_key(spec, path, {"zero", "cubic", "poly"});
    if (kind == "zero") return zero_nonlinearity();
    if (kind == "cubic") {
        const json& c = payload(spec, path, "cubic");
        require_keys(c, path + ".cubic", {"beta"});
        return cubic(require_number(c, path + ".cubic", "beta"));
    }
    const json& arr = payload(spec, path, "poly");
    if (!arr.is_array()) throw ConfigError(path + ".poly", "expected [c1, c2, ...]");
    std::vector<double> coeffs;
    for (const auto& c : arr) coeffs.push_back(c.get<double>());
    return polynomial(coeffs);
}

PastHistory parse_past(const json& spec, const std::string& path, const Grid& grid,
                       const DiscreteOperator* A, std::uint64_t seed) {
    const std::string kind = variant_key(spec, path, {"zero", "constant_past", "exp_past"});
    if (kind == "zero") return PastHistory::zero();
    if (kind == "constant_past")
        return PastHistory::constant(
            parse_field(payload(spec, path, "constant_past"), path + ".constant_past", grid, A, seed));
    const json& e = payload(spec, path, "exp_past");
    require_keys(e, path + ".exp_past", {"rate", "profile"});
    return PastHistory::exponential(
        require_number(e, path + ".exp_past", "rate"),
        parse_field(e["profile"], path + ".exp_past.profile", grid, A, seed));
}

Scenario Scenario::parse(const json& doc) {
    require_keys(doc, "scenario",
                 {"grid", "mu", "kernel", "phi", "forcing", "u0", "past", "dt", "T_final",
                  "sample_every", "seed", "nu", "history", "solver"});
    Scenario sc;
    sc.doc = doc;
    sc.hash = canonical_hash(doc);

    if (!doc.contains("grid")) throw ConfigError("grid", "missing");
    const json& g = doc["grid"];
    require_keys(g, "grid", {"nx", "ny", "Lx", "Ly"});
    sc.grid.nx = g.value("nx", 0);
    sc.grid.ny = g.value("ny", 0);
    sc.grid.Lx = number_or(g, "Lx", 1.0);
    sc.grid.Ly = number_or(g, "Ly", 1.0);
    sc.grid.validate();

    sc.mu_spec = doc.value("mu", json{{"constant", {0.0, 0.0}}});
    sc.kernel_spec = doc.value("kernel", json{{"exp_sum", {{1.0, 1.0}}}});
    sc.phi_spec = doc.value("phi", json("zero"));
    sc.forcing_spec = doc.value("forcing", json("zero"));
    sc.u0_spec = doc.value("u0", json("zero"));
    sc.past_spec = doc.value("past", json("zero"));

    sc.dt = doc.value("dt", 1e-3);
    if (!(sc.dt > 0.0)) throw ConfigError("dt", "must be > 0");
    sc.T_final = doc.value("T_final", 1.0);
    if (!(sc.T_final >= 0.0)) throw ConfigError("T_final", "must be >= 0");
    sc.sample_every = doc.value("sample_every", 1);
    if (sc.sample_every < 1) throw ConfigError("sample_every", "must be >= 1");
    sc.seed = doc.value("seed", 0);
    if (doc.contains("nu")) {
        sc.nu = doc["nu"].get<double>();
        if (!(*sc.nu > 0.0)) throw ConfigError("nu", "must be > 0");
    }
    if (doc.contains("history")) {
        const json& h = doc["history"];
        require_keys(h, "history", {"representation", "nodes_per_decade"});
        const std::string r = h.value("representation", "both");
        if (r == "both")
            sc.repr = HistoryRepr::Both;
        else if (r == "modebank")
            sc.repr = HistoryRepr::ModeBank;
        else if (r == "ringbuffer")
            sc.repr = HistoryRepr::RingBuffer;
        else
            throw ConfigError("history.representation",
                              "expected both, modebank or ringbuffer");
        if (h.contains("nodes_per_decade")) {
            sc.nodes_per_decade = h["nodes_per_decade"].get<int>();
            if (*sc.nodes_per_decade < 4)
                throw ConfigError("history.nodes_per_decade", "must be >= 4");
        }
    }
    if (doc.contains("solver")) {
        const json& s = doc["solver"];
        require_keys(s, "solver", {"cg_tol"});
        sc.cg_tol = s.value("cg_tol", 1e-10);
        if (!(sc.cg_tol > 0.0)) throw ConfigError("solver.cg_tol", "must be > 0");
    }
    return sc;
}

Scenario Scenario::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("scenario", "cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("scenario", std::string("JSON parse error: ") + e.what());
    }
    return parse(doc);
}

StepContext ScenarioObjects::step_context() const {
    StepContext ctx;
    ctx.A = &A;
    ctx.phi = &phi;
    ctx.f = &forcing;
    return ctx;
}

SystemState ScenarioObjects::initial_state(double dt, HistoryRepr repr) const {
    SystemState st = make_state(u0, past, kernel, quad, dt, repr);
    return st;
}

ScenarioObjects build_scenario(const Scenario& sc, bool need_eigen_gate) {
    ScenarioObjects obj;
    obj.grid = sc.grid;
    obj.mu = parse_mu(sc.mu_spec, "mu", sc.grid);
    obj.sigma = conductivity_from_beltrami(obj.mu);
    obj.A = assemble(obj.sigma, sc.grid);
    obj.A_laplace = assemble(
        conductivity_from_beltrami(beltrami_constant(sc.grid, {0.0, 0.0})), sc.grid);
    obj.kernel = parse_kernel(sc.kernel_spec, "kernel");

    const int npd = sc.nodes_per_decade ? *sc.nodes_per_decade : nodes_per_decade_for(sc.dt);
    const double s_min = std::min(sc.dt, obj.kernel->s_max() / 16.0);
    obj.quad = std::make_shared<SQuadrature>(
        obj.kernel, SGrid::geometric(obj.kernel->s_max(), s_min, npd));

    obj.phi = parse_phi(sc.phi_spec, "phi");
    obj.forcing = parse_field(sc.forcing_spec, "forcing", sc.grid, &obj.A, sc.seed ^ 0x1ull);
    obj.u0 = parse_field(sc.u0_spec, "u0", sc.grid, &obj.A, sc.seed ^ 0x2ull);
    obj.past = parse_past(sc.past_spec, "past", sc.grid, &obj.A, sc.seed ^ 0x3ull);
    obj.nu = sc.nu ? *sc.nu : default_nu(*obj.kernel);

    // Kernel axioms are validated, not assumed.
    const KernelReport kr = validate_kernel(*obj.kernel);
    if (!kr.k1_ok) throw ConfigError("kernel", "(K1) fails: h must be non-negative and non-increasing");
    if (!kr.k2_ok) throw ConfigError("kernel", "(K2) fails: kappa <= Theta h violated");
    if (kr.normalization_error > (obj.kernel->repr() == MemoryKernel::Repr::ExponentialSum
                                      ? 1e-10
                                      : 1e-3))
        throw ConfigError("kernel", "normalization int s h = 1 violated (error " +
                                        std::to_string(kr.normalization_error) + ")");

    if (need_eigen_gate) {
        obj.lambda1_laplace = smallest_eigenvalue(obj.A_laplace, 1e-8);
        obj.lambda_lower = obj.sigma.m_k * obj.lambda1_laplace;
        // (P1) gate against the discrete lower bound.
        if (obj.phi.diss_margin >= obj.lambda_lower)
            throw ConfigError("phi",
                              "(P1) gate fails: diss_margin " +
                                  std::to_string(obj.phi.diss_margin) +
                                  " >= m(k)*lambda1(-Delta_h) = " +
                                  std::to_string(obj.lambda_lower));
    }
    return obj;
}

} // namespace memoryheat
