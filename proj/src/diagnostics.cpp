#include "memoryheat/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace memoryheat {

double default_nu(const MemoryKernel& kernel) {
    return std::min(0.25, 1.0 / (4.0 * kernel.theta()));
}

EnergyReport energy(const SystemState& state, const DiscreteOperator& A, int r, double nu) {
    if (r != 0 && r != 1) throw ConfigError("diagnostics", "energy supports r in {0,1}");
    if (!state.ring)
        throw ConfigError("diagnostics", "energy needs the ring-buffer history for norms");
    EnergyReport rep;
    rep.r = r;
    rep.nu = nu;
    rep.t = state.t;
    for (int k = 0; k < 4; ++k) rep.u_norms[k] = v_norm(A, state.u, k);
    rep.eta_norm_m1 = std::sqrt(std::max(0.0, state.ring->m_norm_sq(A, 1)));
    rep.eta_norm_m2 = std::sqrt(std::max(0.0, state.ring->m_norm_sq(A, 2)));
    rep.tail_u = state.ring->tail_u(A, r + 1);
    const double eta_sq = (r == 0) ? rep.eta_norm_m1 * rep.eta_norm_m1
                                   : rep.eta_norm_m2 * rep.eta_norm_m2;
    rep.h_norm_sq = rep.u_norms[r] * rep.u_norms[r] + eta_sq;
    rep.E = rep.h_norm_sq + 2.0 * nu * rep.tail_u;
    // Equivalence band (1 <= E/||.||^2 <= 1+2 nu Theta).
    const double theta = state.ring->quadrature().kernel().theta();
    const double hi = (1.0 + 2.0 * nu * theta) * rep.h_norm_sq + 1e-12;
    if (rep.E < rep.h_norm_sq - 1e-12 || rep.E > hi)
        throw NumericError(0, "energy equivalence band violated");
    return rep;
}

EnergySample energy_sample(const SystemState& state, const DiscreteOperator& A, int r,
                           double nu, const GridFunction& g) {
    EnergySample s;
    s.t = state.t;
    const EnergyReport rep = energy(state, A, r, nu);
    s.E = rep.E;
    s.u_vr1_sq = v_norm_sq(A, state.u, r + 1);
    s.g_dot_u = v_dot(A, g, state.u, r);
    return s;
}

std::vector<double> energy_inequality_residual(const std::vector<EnergySample>& samples,
                                               double nu) {
    if (samples.size() < 2)
        throw ConfigError("diagnostics", "residual series needs >= 2 samples");
    std::vector<double> out;
    out.reserve(samples.size() - 1);
    for (std::size_t n = 0; n + 1 < samples.size(); ++n) {
        const EnergySample& a = samples[n];
        const EnergySample& b = samples[n + 1];
        const double dt = b.t - a.t;
        const double dE = (b.E - a.E) / dt;
        const double mid_u = 0.5 * (a.u_vr1_sq + b.u_vr1_sq);
        const double mid_E = 0.5 * (a.E + b.E);
        const double mid_g = 0.5 * (a.g_dot_u + b.g_dot_u);
        out.push_back(dE + (1.0 - nu) * mid_u + nu * nu * mid_E - 2.0 * mid_g);
    }
    return out;
}

double positive_part_max(const std::vector<double>& residuals) {
    double m = 0.0;
    for (double r : residuals) m = std::max(m, r);
    return m;
}

FitResult fit_absorbing(const std::vector<double>& t, const std::vector<double>& value) {
    FitResult fit;
    if (t.size() != value.size() || t.size() < 10)
        throw ConfigError("diagnostics", "fit_absorbing needs >= 10 samples");
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t[i] <= t[i - 1]) throw ConfigError("diagnostics", "fit times must increase");

    const std::size_t n = t.size();
    const std::size_t tail = std::max<std::size_t>(1, n / 10);
    double csum = 0.0;
    for (std::size_t i = n - tail; i < n; ++i) csum += value[i];
    fit.C = csum / tail;

    // Log-linear fit of (value - C) over the positive excess.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ex = value[i] - fit.C;
        if (ex <= 0.0) continue;
        const double y = std::log(ex);
        sx += t[i];
        sy += y;
        sxx += t[i] * t[i];
        sxy += t[i] * y;
        ++used;
    }
    if (used < n / 2 || used < 2) {
        fit.reliable = false;
        return fit;
    }
    const double denom = used * sxx - sx * sx;
    if (!(denom > 0.0)) {
        fit.reliable = false;
        return fit;
    }
    const double slope = (used * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / used;
    fit.c = -slope;
    fit.I = std::exp(intercept);
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double model = fit.I * std::exp(-fit.c * t[i]) + fit.C;
        rss += (value[i] - model) * (value[i] - model);
    }
    fit.rms_residual = std::sqrt(rss / n);
    fit.reliable = true;
    return fit;
}

double v_state_norm(const SystemState& state, const DiscreteOperator& A) {
    if (!state.ring) throw ConfigError("diagnostics", "V-norm needs the ring-buffer history");
    const double u2 = v_norm_sq(A, state.u, 2);
    const double m2 = state.ring->m_norm_sq(A, 2);
    return std::sqrt(std::max(0.0, u2 + m2));
}

std::vector<WindowAverage> linfty_time_average(const std::vector<double>& t,
                                               const std::vector<double>& linf, double r_exp,
                                               double window) {
    if (t.size() != linf.size() || t.size() < 2)
        throw ConfigError("diagnostics", "time-average needs matching series");
    const double dt = t[1] - t[0];
    if (window < dt) throw ConfigError("diagnostics", "window shorter than the sample step");
    std::vector<WindowAverage> out;
    const std::size_t per = static_cast<std::size_t>(std::llround(window / dt));
    for (std::size_t start = 0; start + per < t.size(); start += per) {
        double acc = 0.0;
        for (std::size_t i = start; i < start + per; ++i)
            acc += std::pow(linf[i], r_exp) * dt;
        out.push_back({t[start], acc});
    }
    return out;
}

MaterializedState materialize(const SystemState& state) {
    if (!state.ring) throw ConfigError("diagnostics", "materialize needs ring-buffer history");
    MaterializedState m;
    m.u = state.u;
    m.eta = state.ring->eval_all();
    return m;
}

double pair_distance(const MaterializedState& a, const MaterializedState& b,
                     const DiscreteOperator& A, const SQuadrature& quad, int r) {
    if (a.eta.size() != b.eta.size())
        throw ConfigError("diagnostics", "states materialized on different s-grids");
    // Norm selection: H^0 = V^0 x M^1, H^1 = V^1 x M^2, V = V^2 x M^2.
    const int ur = r;
    const int er = (r == 0) ? 1 : 2;
    GridFunction du = a.u;
    du -= b.u;
    double acc = v_norm_sq(A, du, ur);
    const auto w = quad.weights_h(0.0);
    for (std::size_t i = 0; i < a.eta.size(); ++i) {
        GridFunction de = a.eta[i];
        de -= b.eta[i];
        acc += w[i] * v_norm_sq(A, de, er);
    }
    return std::sqrt(std::max(0.0, acc));
}

double attraction_distance(const std::vector<MaterializedState>& ensemble,
                           const std::vector<MaterializedState>& target,
                           const DiscreteOperator& A, const SQuadrature& quad, int r) {
    if (ensemble.empty() || target.empty())
        throw ConfigError("diagnostics", "attraction distance needs nonempty sets");
    double worst = 0.0;
    for (const auto& a : ensemble) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& b : target)
            best = std::min(best, pair_distance(a, b, A, quad, r));
        worst = std::max(worst, best);
    }
    return worst;
}

} // namespace memoryheat
