#include "memoryheat/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "memoryheat/beltrami.hpp"
#include "memoryheat/diagnostics.hpp"

namespace memoryheat {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("out", "cannot create " + dir.string());
}

json fit_to_json(const FitResult& fit) {
    json f;
    f["model"] = "I*exp(-c*t) + C";
    f["I"] = fit.I;
    f["c"] = fit.c;
    f["C"] = fit.C;
    f["rms_residual"] = fit.rms_residual;
    f["reliable"] = fit.reliable;
    return f;
}

} // namespace

int worker_threads() {
    const char* env = std::getenv("MEMORYHEAT_THREADS");
    if (!env) return 1;
    const int n = std::atoi(env);
    return std::max(1, n);
}

RunOutcome run_simulation(const Scenario& sc, const fs::path& outdir) {
    ensure_dir(outdir);
    ScenarioObjects obj = build_scenario(sc);
    RunManifest manifest(sc.hash, kToolVersion);

    const long nsteps = static_cast<long>(std::llround(sc.T_final / sc.dt));
    SystemState state = obj.initial_state(sc.dt, sc.repr);
    StepContext ctx = obj.step_context();
    ctx.dt = sc.dt;
    ctx.cg_tol = sc.cg_tol;

    const bool with_ring = state.ring.has_value();
    std::vector<std::string> cols = {"t", "u_V0", "u_V1", "u_V2", "u_V3", "u_linf"};
    if (with_ring) {
        cols.insert(cols.end(), {"eta_M1", "eta_M2", "E_r0", "E_r1", "H0_sq", "H1_sq"});
    }
    CsvWriter series(cols);
    std::vector<double> fit_t, fit_h0;

    run_trajectory(state, ctx, nsteps, sc.sample_every,
                   [&](const SystemState& s, long) {
                       std::vector<double> row = {s.t, v_norm(obj.A, s.u, 0),
                                                  v_norm(obj.A, s.u, 1), v_norm(obj.A, s.u, 2),
                                                  v_norm(obj.A, s.u, 3), norm_linf(s.u)};
                       if (with_ring) {
                           const EnergyReport e0 = energy(s, obj.A, 0, obj.nu);
                           const EnergyReport e1 = energy(s, obj.A, 1, obj.nu);
                           row.insert(row.end(),
                                      {e0.eta_norm_m1, e0.eta_norm_m2, e0.E, e1.E,
                                       e0.h_norm_sq, e1.h_norm_sq});
                           fit_t.push_back(s.t);
                           fit_h0.push_back(e0.h_norm_sq);
                       }
                       series.add_row(row);
                   });

    series.write(outdir / "series.csv");
    manifest.add_output("series", outdir / "series.csv", "csv");
    write_snapshot(state.u, state.t, outdir / "final_u.f64");
    manifest.add_output("final_u", outdir / "final_u.f64", "f64");
    manifest.add_output("final_u_sidecar", outdir / "final_u.f64.json", "json");

    json summary;
    summary["scenario_hash"] = sc.hash;
    summary["tool_version"] = kToolVersion;
    summary["steps"] = nsteps;
    summary["t_final"] = state.t;
    summary["nu"] = obj.nu;
    summary["lambda_lower"] = obj.lambda_lower;
    summary["final_u_V0"] = v_norm(obj.A, state.u, 0);
    summary["final_u_linf"] = norm_linf(state.u);
    if (with_ring && fit_t.size() >= 10) {
        summary["fit_H0_sq"] = fit_to_json(fit_absorbing(fit_t, fit_h0));
    }
    manifest.add_assertion("state_finite", all_finite(state.u), 1.0);

    json gates;
    gates["p1_diss_margin"] = obj.phi.diss_margin;
    gates["p1_lambda_lower"] = obj.lambda_lower;
    summary["gates"] = gates;

    write_json(summary, outdir / "summary.json");
    manifest.add_output("summary", outdir / "summary.json", "json");
    manifest.add_output("manifest", outdir / "manifest.json", "json");
    manifest.write(outdir);

    RunOutcome out;
    out.outdir = outdir;
    out.summary = std::move(summary);
    out.assertions_passed = manifest.all_passed();
    return out;
}

RunOutcome run_steady(const Scenario& sc, const fs::path& outdir) {
    ensure_dir(outdir);
    ScenarioObjects obj = build_scenario(sc);
    RunManifest manifest(sc.hash, kToolVersion);

    const SystemState zf =
        steady_state(obj.A, obj.forcing, obj.kernel, obj.quad, sc.dt, sc.repr);
    const double residual = stationarity_residual(zf, obj.A, obj.forcing);

    write_snapshot(zf.u, 0.0, outdir / "u_f.f64");
    manifest.add_output("u_f", outdir / "u_f.f64", "f64");
    manifest.add_output("u_f_sidecar", outdir / "u_f.f64.json", "json");

    json summary;
    summary["scenario_hash"] = sc.hash;
    summary["tool_version"] = kToolVersion;
    summary["stationarity_residual"] = residual;
    summary["u_f_V0"] = v_norm(obj.A, zf.u, 0);
    summary["u_f_V1"] = v_norm(obj.A, zf.u, 1);
    manifest.add_assertion("stationarity_residual", residual <= 1e-8, residual);

    write_json(summary, outdir / "summary.json");
    manifest.add_output("summary", outdir / "summary.json", "json");
    manifest.add_output("manifest", outdir / "manifest.json", "json");
    manifest.write(outdir);

    RunOutcome out;
    out.outdir = outdir;
    out.summary = std::move(summary);
    out.assertions_passed = manifest.all_passed();
    return out;
}

RunOutcome run_decompose(const Scenario& sc, const fs::path& outdir) {
    ensure_dir(outdir);
    ScenarioObjects obj = build_scenario(sc);
    RunManifest manifest(sc.hash, kToolVersion);

    const MonotoneShift shift = monotone_shift(obj.phi);
    SystemState initial = obj.initial_state(sc.dt, HistoryRepr::Both);
    StepContext ctx = obj.step_context();
    ctx.dt = sc.dt;
    ctx.cg_tol = std::min(sc.cg_tol, 1e-12);

    const long nsteps = static_cast<long>(std::llround(sc.T_final / sc.dt));
    const DecompositionResult res =
        decomposition_run(initial, ctx, shift, nsteps, sc.sample_every);

    CsvWriter csv({"t", "sum_err", "L_H0", "K_H1", "u_H0"});
    for (const auto& s : res.samples)
        csv.add_row({s.t, s.sum_err, std::sqrt(s.l_h0_sq), std::sqrt(s.k_h1_sq),
                     std::sqrt(s.u_h0_sq)});
    csv.write(outdir / "decomposition.csv");
    manifest.add_output("decomposition", outdir / "decomposition.csv", "csv");

    json summary;
    summary["scenario_hash"] = sc.hash;
    summary["tool_version"] = kToolVersion;
    summary["ell"] = shift.ell;
    summary["max_sum_err"] = res.max_sum_err;
    summary["fitted_decay_rate"] = res.fitted_decay_rate;
    summary["sup_K_H1"] = res.sup_k_h1;
    manifest.add_assertion("sum_consistency", res.max_sum_err <= 1e-6, res.max_sum_err);
    manifest.add_assertion("L_decay_positive", res.fitted_decay_rate > 0.0,
                           res.fitted_decay_rate);
    manifest.add_assertion("K_H1_finite", std::isfinite(res.sup_k_h1), res.sup_k_h1);

    write_json(summary, outdir / "summary.json");
    manifest.add_output("summary", outdir / "summary.json", "json");
    manifest.add_output("manifest", outdir / "manifest.json", "json");
    manifest.write(outdir);

    RunOutcome out;
    out.outdir = outdir;
    out.summary = std::move(summary);
    out.assertions_passed = manifest.all_passed();
    return out;
}

RunOutcome run_validate(const Scenario& sc, const fs::path& outdir) {
    ensure_dir(outdir);
    // Build step by step so the report carries every validator outcome; the
    // ConfigError of a failing gate is rethrown after the report is written.
    json report;
    report["scenario_hash"] = sc.hash;
    report["tool_version"] = kToolVersion;

    ScenarioObjects obj;
    std::string gate_error;
    try {
        obj = build_scenario(sc, true);
    } catch (const ConfigError& e) {
        gate_error = e.what();
    }

    // Conductivity invariants (re-derive even on gate failure when possible).
    try {
        const BeltramiField mu = parse_mu(sc.mu_spec, "mu", sc.grid);
        const ConductivityTensor sigma = conductivity_from_beltrami(mu);
        const EllipticityReport er = ellipticity_report(sigma);
        json c;
        c["k_bound"] = mu.k_bound;
        c["m_k"] = sigma.m_k;
        c["M_k"] = sigma.M_k;
        c["min_eig"] = er.min_eig;
        c["max_eig"] = er.max_eig;
        c["max_det_error"] = er.max_det_error;
        c["eig_in_bounds"] =
            er.min_eig >= sigma.m_k - 1e-10 && er.max_eig <= sigma.M_k + 1e-10;
        c["det_ok"] = er.max_det_error <= 1e-12;
        report["conductivity"] = c;
    } catch (const ConfigError& e) {
        report["conductivity"] = json{{"error", e.what()}};
        if (gate_error.empty()) gate_error = e.what();
    }

    try {
        auto kernel = parse_kernel(sc.kernel_spec, "kernel");
        const KernelReport kr = validate_kernel(*kernel);
        json k;
        k["K1_ok"] = kr.k1_ok;
        k["K2_ok"] = kr.k2_ok;
        k["normalization_error"] = kr.normalization_error;
        k["theta_min"] = kr.theta_min;
        k["theta"] = kernel->theta();
        k["exp_decay_ok"] = kr.exp_decay_ok;
        k["certified_at_nodes_only"] = kr.certified_at_nodes_only;
        report["kernel"] = k;
    } catch (const ConfigError& e) {
        report["kernel"] = json{{"error", e.what()}};
        if (gate_error.empty()) gate_error = e.what();
    }

    try {
        const Nonlinearity phi = parse_phi(sc.phi_spec, "phi");
        json p;
        p["name"] = phi.name;
        p["growth_m"] = phi.growth_m;
        p["growth_C"] = phi.growth_c;
        p["diss_margin"] = phi.diss_margin;
        if (!gate_error.empty()) p["p1_gate"] = "blocked";
        report["phi"] = p;
    } catch (const ConfigError& e) {
        report["phi"] = json{{"error", e.what()}};
        if (gate_error.empty()) gate_error = e.what();
    }

    if (gate_error.empty()) {
        json g;
        g["lambda1_laplace"] = obj.lambda1_laplace;
        g["lambda_lower"] = obj.lambda_lower;
        g["p1_ok"] = true;
        report["gates"] = g;
    } else {
        report["gates"] = json{{"error", gate_error}};
    }

    write_json(report, outdir / "validate.json");
    RunManifest manifest(sc.hash, kToolVersion);
    manifest.add_output("validate", outdir / "validate.json", "json");
    manifest.add_output("manifest", outdir / "manifest.json", "json");
    manifest.add_assertion("gates", gate_error.empty(), gate_error.empty() ? 1.0 : 0.0);
    manifest.write(outdir);

    if (!gate_error.empty()) throw ConfigError("", gate_error);

    RunOutcome out;
    out.outdir = outdir;
    out.summary = std::move(report);
    out.assertions_passed = true;
    return out;
}

RunOutcome run_sweep(const Scenario& sc, const std::string& axis,
                     const std::vector<double>& values, const fs::path& outdir) {
    if (values.empty()) throw ConfigError("sweep.values", "empty sweep value list");
    ensure_dir(outdir);

    // The axis must address an existing scalar key (dotted path).
    json probe = sc.doc;
    {
        json* node = &probe;
        std::string part, rest = axis;
        while (true) {
            const auto dot = rest.find('.');
            part = rest.substr(0, dot);
            if (!node->is_object() || !node->contains(part))
                throw ConfigError("sweep.axis", axis + " does not address a scenario key");
            node = &(*node)[part];
            if (dot == std::string::npos) break;
            rest = rest.substr(dot + 1);
        }
        if (!node->is_number())
            throw ConfigError("sweep.axis", axis + " is not a scalar");
    }

    struct Member {
        double value;
        fs::path dir;
        json summary;
        GridFunction terminal_u;
        bool energy_monotone = false;
    };
    std::vector<Member> members(values.size());

    auto run_member = [&](std::size_t idx) {
        json doc = sc.doc;
        json* node = &doc;
        std::string rest = axis;
        while (true) {
            const auto dot = rest.find('.');
            const std::string part = rest.substr(0, dot);
            if (dot == std::string::npos) {
                (*node)[part] = values[idx];
                break;
            }
            node = &(*node)[part];
            rest = rest.substr(dot + 1);
        }
        const Scenario msc = Scenario::parse(doc);
        const fs::path mdir = outdir / ("member_" + std::to_string(idx));
        RunOutcome r = run_simulation(msc, mdir);
        members[idx].value = values[idx];
        members[idx].dir = mdir;
        members[idx].summary = r.summary;
        members[idx].terminal_u = read_snapshot(msc.grid, mdir / "final_u.f64");

        if (axis == "nu") {
            // E_{0,nu} monotonicity scan from the emitted series.
            std::ifstream in(mdir / "series.csv");
            std::string line;
            std::getline(in, line);
            int e_col = -1, col = 0;
            {
                std::stringstream hs(line);
                std::string name;
                while (std::getline(hs, name, ',')) {
                    if (name == "E_r0") e_col = col;
                    ++col;
                }
            }
            bool ok = e_col >= 0;
            double prev = std::numeric_limits<double>::infinity();
            const double slack = 100.0 * msc.dt * msc.dt;
            while (ok && std::getline(in, line)) {
                std::stringstream ls(line);
                std::string cell;
                double e = 0.0;
                for (int c = 0; std::getline(ls, cell, ','); ++c)
                    if (c == e_col) e = std::stod(cell);
                if (e > prev + slack * (1.0 + prev)) ok = false;
                prev = e;
            }
            members[idx].energy_monotone = ok;
        }
    };

    const int threads = worker_threads();
    if (threads <= 1) {
        for (std::size_t i = 0; i < members.size(); ++i) run_member(i);
    } else {
        std::vector<std::thread> pool;
        std::size_t next = 0;
        std::mutex mtx;
        const std::size_t nthreads = std::min<std::size_t>(threads, members.size());
        for (std::size_t t = 0; t < nthreads; ++t) {
            pool.emplace_back([&]() {
                while (true) {
                    std::size_t idx;
                    {
                        std::lock_guard<std::mutex> lock(mtx);
                        if (next >= members.size()) return;
                        idx = next++;
                    }
                    run_member(idx);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    RunManifest manifest(sc.hash, kToolVersion);
    CsvWriter table({"value", "terminal_u_V0", "diff_prev", "ratio"});
    std::vector<double> diffs(values.size(), 0.0);
    for (std::size_t i = 0; i < members.size(); ++i) {
        double diff = 0.0;
        double ratio = 0.0;
        if (i > 0) {
            GridFunction d = members[i - 1].terminal_u;
            d -= members[i].terminal_u;
            diff = norm_l2(d);
            diffs[i] = diff;
            if (i > 1 && diff > 0.0) ratio = diffs[i - 1] / diff;
        }
        table.add_row({members[i].value, norm_l2(members[i].terminal_u), diff, ratio});
    }
    table.write(outdir / "comparison.csv");
    manifest.add_output("comparison", outdir / "comparison.csv", "csv");

    json summary;
    summary["scenario_hash"] = sc.hash;
    summary["tool_version"] = kToolVersion;
    summary["axis"] = axis;
    summary["values"] = values;

    if (axis == "dt" && values.size() >= 3) {
        json ratios = json::array();
        bool order1 = true;
        for (std::size_t i = 2; i < values.size(); ++i) {
            const double r = diffs[i] > 0.0 ? diffs[i - 1] / diffs[i] : 0.0;
            ratios.push_back(r);
            if (r < 1.7 || r > 2.3) order1 = false;
        }
        summary["self_convergence_ratios"] = ratios;
        manifest.add_assertion("self_convergence_order1", order1,
                               ratios.empty() ? 0.0 : ratios.back().get<double>());
    }
    if (axis == "nu") {
        json per = json::array();
        bool any = false;
        for (const auto& m : members) {
            per.push_back(json{{"nu", m.value}, {"monotone", m.energy_monotone}});
            any = any || m.energy_monotone;
        }
        summary["nu_scan"] = per;
        manifest.add_assertion("nu_scan_any_monotone", any, any ? 1.0 : 0.0);
    }

    write_json(summary, outdir / "summary.json");
    manifest.add_output("summary", outdir / "summary.json", "json");
    manifest.add_output("manifest", outdir / "manifest.json", "json");
    manifest.write(outdir);

    RunOutcome out;
    out.outdir = outdir;
    out.summary = std::move(summary);
    out.assertions_passed = manifest.all_passed();
    return out;
}

// ---------------------------------------------------------------------------
// Beltrami property suite
// ---------------------------------------------------------------------------

namespace {

SpectralField torus_mode(const Torus& t, int kx, int ky, std::complex<double> amp = 1.0) {
    SpectralField f(t);
    const double base = 2.0 * M_PI / t.L;
    for (int j = 0; j < t.n; ++j)
        for (int i = 0; i < t.n; ++i) {
            const double ph = base * (kx * t.x(i) + ky * t.y(j));
            f.v[t.index(i, j)] = amp * std::complex<double>(std::cos(ph), std::sin(ph));
        }
    return f;
}

SpectralField build_torus_mu(const json& spec, const Torus& t) {
    std::string kind;
    if (spec.is_object() && spec.size() == 1) kind = spec.begin().key();
    else throw ConfigError("mu", "expected a single-key object");
    SpectralField mu(t);
    if (kind == "constant") {
        const json& c = spec["constant"];
        if (!c.is_array() || c.size() != 2) throw ConfigError("mu.constant", "expected [re,im]");
        const std::complex<double> v(c[0].get<double>(), c[1].get<double>());
        for (auto& z : mu.v) z = v;
        return mu;
    }
    if (kind == "bump") {
        // Real, even in both axes: the parity class with vanishing torus
        // compatibility defect in the cross-validation.
        const double k = spec["bump"].value("k", 0.4);
        const double base = 2.0 * M_PI / t.L;
        for (int j = 0; j < t.n; ++j)
            for (int i = 0; i < t.n; ++i)
                mu.v[t.index(i, j)] =
                    k * std::cos(base * t.x(i)) * std::cos(base * t.y(j));
        return mu;
    }
    if (kind == "phase") {
        const double k = spec["phase"].value("k", 0.5);
        const double base = 2.0 * M_PI / t.L;
        for (int j = 0; j < t.n; ++j)
            for (int i = 0; i < t.n; ++i) {
                const double th = base * (t.x(i) + 2.0 * t.y(j));
                mu.v[t.index(i, j)] = k * std::complex<double>(std::cos(th), std::sin(th));
            }
        return mu;
    }
    throw ConfigError("mu." + kind, "unknown torus mu variant");
}

double mu_sup(const SpectralField& mu) {
    double m = 0.0;
    for (const auto& z : mu.v) m = std::max(m, std::abs(z));
    return m;
}

} // namespace

BeltramiScenario BeltramiScenario::parse(const json& doc) {
    BeltramiScenario sc;
    sc.doc = doc;
    sc.hash = canonical_hash(doc);
    if (!doc.contains("torus")) throw ConfigError("torus", "missing");
    sc.n = doc["torus"].value("n", 64);
    sc.L = doc["torus"].value("L", 1.0);
    if (sc.n < 8 || (sc.n & (sc.n - 1)) != 0)
        throw ConfigError("torus.n", "expected a power of two >= 8");
    sc.mu_spec = doc.value("mu", json{{"constant", {0.3, 0.0}}});
    const json r = doc.value("resolvent", json::object());
    sc.cfg.tol = r.value("tol", 1e-12);
    sc.cfg.max_iter = r.value("max_iter", 800);
    if (r.contains("q_exponents"))
        for (const auto& q : r["q_exponents"]) sc.cfg.q_exponents.push_back(q.get<double>());
    return sc;
}

BeltramiScenario BeltramiScenario::load(const std::filesystem::path& path) {
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

RunOutcome run_beltrami(const BeltramiScenario& sc, const fs::path& outdir) {
    ensure_dir(outdir);
    RunManifest manifest(sc.hash, kToolVersion);
    const Torus torus{sc.n, sc.L};
    SpectralField mu = build_torus_mu(sc.mu_spec, torus);
    ResolventConfig cfg = sc.cfg;
    cfg.k = mu_sup(mu);
    if (cfg.q_exponents.empty()) cfg.q_exponents = {2.5, 3.0, 4.0, 8.0};

    json summary;
    summary["scenario_hash"] = sc.hash;
    summary["tool_version"] = kToolVersion;
    summary["k"] = cfg.k;
    summary["q_star"] = cfg.k > 0.0 ? q_star(cfg.k) : std::numeric_limits<double>::infinity();

    // Isometry on a deterministic zero-mean field.
    {
        SpectralField f(torus);
        for (int j = 0; j < torus.n; ++j)
            for (int i = 0; i < torus.n; ++i) {
                const double a = 2.0 * M_PI * (3.0 * i + 5.0 * j) / torus.n;
                f.v[torus.index(i, j)] = {std::sin(a) + 0.3 * std::cos(2 * a), std::cos(3 * a)};
            }
        const std::complex<double> m = f.mean();
        for (auto& z : f.v) z -= m;
        const double before = norm_l2(f);
        const double after = norm_l2(beurling(f));
        const double err = std::abs(after - before) / before;
        summary["isometry_error"] = err;
        manifest.add_assertion("isometry", err <= 1e-12, err);
    }
    // Intertwining on a single mode.
    {
        const SpectralField phi = torus_mode(torus, 1, 2);
        const SpectralField lhs = beurling(dbar_complex(phi));
        const SpectralField rhs = d_complex(phi);
        const double err = norm_l2(lhs - rhs) / norm_l2(rhs);
        summary["intertwining_error"] = err;
        manifest.add_assertion("intertwining", err <= 1e-12, err);
    }
    // Neumann resolvent on a manufactured two-mode source.
    {
        SpectralField phi = torus_mode(torus, 1, 2);
        const SpectralField extra = torus_mode(torus, 3, -1, 0.5);
        for (std::size_t i = 0; i < phi.v.size(); ++i) phi.v[i] += extra.v[i];
        const ResolventResult res = neumann_resolvent(mu, phi, cfg);
        CsvWriter hist({"iteration", "update_norm"});
        for (std::size_t i = 0; i < res.residual_history.size(); ++i)
            hist.add_row({static_cast<double>(i + 1), res.residual_history[i]});
        hist.write(outdir / "residual_history.csv");
        manifest.add_output("residual_history", outdir / "residual_history.csv", "csv");
        summary["resolvent_iterations"] = res.iterations;
        summary["resolvent_residual"] = res.final_residual;
        summary["contraction_ratio"] = res.contraction_ratio;
        const double bound = cfg.tol * (1.0 + cfg.k) / (1.0 - cfg.k);
        manifest.add_assertion("resolvent_residual", res.final_residual <= bound,
                               res.final_residual);
        manifest.add_assertion("contraction_ratio", res.contraction_ratio <= cfg.k + 0.05,
                               res.contraction_ratio);

        // q-window stability under one refinement.
        const Torus fine{2 * torus.n, torus.L};
        SpectralField mu_f = build_torus_mu(sc.mu_spec, fine);
        SpectralField phi_f = torus_mode(fine, 1, 2);
        const SpectralField extra_f = torus_mode(fine, 3, -1, 0.5);
        for (std::size_t i = 0; i < phi_f.v.size(); ++i) phi_f.v[i] += extra_f.v[i];
        const ResolventResult res_f = neumann_resolvent(mu_f, phi_f, cfg);
        json qrep = json::array();
        const double qs = cfg.k > 0.0 ? q_star(cfg.k) : std::numeric_limits<double>::infinity();
        bool window_ok = true;
        for (std::size_t qi = 0; qi < cfg.q_exponents.size(); ++qi) {
            const double q = cfg.q_exponents[qi];
            const double coarse = res.lq_norms[qi].second;
            const double fine_n = res_f.lq_norms[qi].second;
            const double rel = std::abs(fine_n - coarse) / std::max(coarse, 1e-300);
            json e;
            e["q"] = q;
            e["inside_window"] = q < qs;
            e["norm_coarse"] = coarse;
            e["norm_fine"] = fine_n;
            e["rel_change"] = rel;
            if (q < qs) {
                e["stable"] = rel <= 0.10;
                window_ok = window_ok && rel <= 0.10;
            } else {
                e["note"] = "outside guaranteed window";
            }
            qrep.push_back(e);
        }
        summary["q_window"] = qrep;
        manifest.add_assertion("q_window_stable", window_ok, window_ok ? 1.0 : 0.0);
        write_json(qrep, outdir / "q_window.json");
        manifest.add_output("q_window", outdir / "q_window.json", "json");
    }
    // Beltrami solve on manufactured data: src = dbar f0 - mu d f0.
    {
        const SpectralField f0 = torus_mode(torus, 2, 1);
        const SpectralField df0 = d_complex(f0);
        SpectralField src = dbar_complex(f0);
        for (std::size_t i = 0; i < src.v.size(); ++i) src.v[i] -= mu.v[i] * df0.v[i];
        const BeltramiSolveResult bs = solve_beltrami(mu, src, cfg);
        summary["solve_residual"] = bs.residual;
        summary["solve_defect"] = bs.defect;
        manifest.add_assertion("solve_residual", bs.residual <= 1e-8, bs.residual);
    }
    // Divergence-form cross-validation at n/2 and n.
    {
        auto run_cross = [&](int n) {
            const Torus t{n, sc.L};
            const SpectralField mu_t = build_torus_mu(sc.mu_spec, t);
            // F = grad w for an even-even potential (plus a zero-mean second
            // component), kept real.
            SpectralField F1(t), F2(t);
            const double base = 2.0 * M_PI / t.L;
            for (int j = 0; j < t.n; ++j)
                for (int i = 0; i < t.n; ++i) {
                    const double x = t.x(i), y = t.y(j);
                    F1.v[t.index(i, j)] = -base * std::sin(base * x) * std::cos(2 * base * y);
                    F2.v[t.index(i, j)] =
                        -2 * base * std::cos(base * x) * std::sin(2 * base * y);
                }
            return cross_validate_divform(mu_t, F1, F2, cfg);
        };
        const CrossValidationReport coarse = run_cross(torus.n / 2);
        const CrossValidationReport fine = run_cross(torus.n);
        summary["cross_discrepancy_coarse"] = coarse.discrepancy_rel;
        summary["cross_discrepancy_fine"] = fine.discrepancy_rel;
        summary["cross_defect"] = fine.defect;
        const double ratio =
            fine.discrepancy_rel > 0.0 ? coarse.discrepancy_rel / fine.discrepancy_rel : 0.0;
        summary["cross_richardson_ratio"] = ratio;
        manifest.add_assertion("cross_decreasing",
                               fine.discrepancy_rel < coarse.discrepancy_rel,
                               fine.discrepancy_rel);
    }

    write_json(summary, outdir / "summary.json");
    manifest.add_output("summary", outdir / "summary.json", "json");
    manifest.add_output("manifest", outdir / "manifest.json", "json");
    manifest.write(outdir);

    RunOutcome out;
    out.outdir = outdir;
    out.summary = std::move(summary);
    out.assertions_passed = manifest.all_passed();
    return out;
}

} // namespace memoryheat
