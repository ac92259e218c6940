#include "memoryheat/dynamics.hpp"

#include <cmath>

namespace memoryheat {

SystemState make_state(GridFunction u0, const PastHistory& past,
                       std::shared_ptr<const MemoryKernel> kernel,
                       std::shared_ptr<const SQuadrature> quad, double dt, HistoryRepr repr) {
    SystemState st;
    const Grid grid = u0.grid;
    st.u = std::move(u0);
    if (repr == HistoryRepr::ModeBank || repr == HistoryRepr::Both) {
        ModeBankHistory mb(grid, kernel);
        mb.set_initial_history(past, quad.get());
        st.modes = std::move(mb);
    }
    if (repr == HistoryRepr::RingBuffer || repr == HistoryRepr::Both) {
        RingBufferHistory rb(grid, quad, dt);
        rb.set_initial_history(past);
        st.ring = std::move(rb);
    }
    return st;
}

GridFunction state_memory_term(const SystemState& state, const DiscreteOperator& A) {
    if (state.modes) return state.modes->memory_term(A);
    if (state.ring) return state.ring->memory_term(A);
    throw ConfigError("dynamics", "state carries no history representation");
}

namespace {

void advance_history(SystemState& state, const GridFunction& u_new, double dt) {
    if (state.modes) state.modes->evolve(u_new, dt);
    if (state.ring) state.ring->evolve(u_new, dt);
}

long step_index(const SystemState& state, double dt) {
    return static_cast<long>(std::llround(state.t / dt));
}

} // namespace

void imex_step_forced(SystemState& state, const StepContext& ctx, const GridFunction& g_expl) {
    const DiscreteOperator& A = *ctx.A;
    const double dt = ctx.dt;
    GridFunction rhs = g_expl;
    axpy(1.0 / dt, state.u, rhs);
    rhs -= state_memory_term(state, A);

    auto shifted = [&](const GridFunction& in, GridFunction& out) {
        A.apply(in, out);
        axpy(1.0 / dt, in, out);
    };
    GridFunction u_new = state.u; // warm start
    const CgResult cg = conjugate_gradient(shifted, rhs, u_new, ctx.cg_tol);
    if (!cg.converged)
        throw NumericError(step_index(state, dt),
                           "implicit solve stalled (relative residual " +
                               std::to_string(cg.relative_residual) + ")");
    if (!all_finite(u_new))
        throw NumericError(step_index(state, dt), "non-finite state detected");
    advance_history(state, u_new, dt);
    state.u = std::move(u_new);
    state.t += dt;
}

void imex_step(SystemState& state, const StepContext& ctx) {
    GridFunction g = *ctx.f;
    for (std::size_t k = 0; k < g.v.size(); ++k) g.v[k] -= ctx.phi->eval(state.u.v[k]);
    imex_step_forced(state, ctx, g);
}

void run_trajectory(SystemState& state, const StepContext& ctx, long nsteps, long sample_every,
                    const std::function<void(const SystemState&, long)>& on_sample) {
    if (sample_every < 1) sample_every = 1;
    if (on_sample) on_sample(state, 0);
    for (long n = 1; n <= nsteps; ++n) {
        imex_step(state, ctx);
        if (on_sample && (n % sample_every == 0 || n == nsteps)) on_sample(state, n);
    }
}

SystemState steady_state(const DiscreteOperator& A, const GridFunction& f,
                         std::shared_ptr<const MemoryKernel> kernel,
                         std::shared_ptr<const SQuadrature> quad, double dt, HistoryRepr repr,
                         double tol) {
    GridFunction uf = solve(A, f, tol);
    uf *= 0.5;
    // eta_f(s) = s u_f and zeta_j = u_f/a_j come out of the constant-past
    // closed forms.
    const PastHistory past = PastHistory::constant(uf);
    return make_state(std::move(uf), past, kernel, quad, dt, repr);
}

double stationarity_residual(const SystemState& zf, const DiscreteOperator& A,
                             const GridFunction& f) {
    GridFunction r = A.apply(zf.u);
    r += state_memory_term(zf, A);
    r -= f;
    return norm_l2(r);
}

DecompositionResult decomposition_run(const SystemState& initial, const StepContext& ctx,
                                      const MonotoneShift& shift, long nsteps,
                                      long sample_every) {
    if (!initial.ring)
        throw ConfigError("dynamics", "decomposition_run needs ring-buffer histories for norms");
    const DiscreteOperator& A = *ctx.A;
    const Grid grid = initial.u.grid;

    SystemState u_state = initial;
    // (v,xi) starts from the full data, (w,zeta) from zero.
    SystemState v_state = initial;
    SystemState w_state;
    w_state.u = GridFunction(grid);
    w_state.t = initial.t;
    if (initial.modes) {
        ModeBankHistory mb(grid, initial.modes->kernel_ptr());
        mb.set_initial_history(PastHistory::zero());
        w_state.modes = std::move(mb);
    }
    {
        RingBufferHistory rb(grid, initial.ring->quadrature_ptr(), ctx.dt);
        rb.set_initial_history(PastHistory::zero());
        w_state.ring = std::move(rb);
    }

    DecompositionResult out;
    if (sample_every < 1) sample_every = 1;

    auto record = [&](long n) {
        DecompositionSample s;
        s.t = u_state.t;
        GridFunction diff = v_state.u;
        diff += w_state.u;
        diff -= u_state.u;
        s.sum_err = norm_l2(diff);
        s.l_h0_sq = v_norm_sq(A, v_state.u, 0) + v_state.ring->m_norm_sq(A, 1);
        s.k_h1_sq = v_norm_sq(A, w_state.u, 1) + w_state.ring->m_norm_sq(A, 2);
        s.u_h0_sq = v_norm_sq(A, u_state.u, 0) + u_state.ring->m_norm_sq(A, 1);
        out.samples.push_back(s);
        out.max_sum_err = std::max(out.max_sum_err, s.sum_err);
        out.sup_k_h1 = std::max(out.sup_k_h1, std::sqrt(s.k_h1_sq));
        (void)n;
    };

    record(0);
    const Nonlinearity& phi = *ctx.phi;
    const Nonlinearity& phi0 = shift.phi0;
    for (long n = 1; n <= nsteps; ++n) {
        // Explicit couplings from the step-n states.
        GridFunction g_v(grid);
        GridFunction g_w = *ctx.f;
        for (std::size_t k = 0; k < g_v.v.size(); ++k) {
            const double uu = u_state.u.v[k];
            const double ww = w_state.u.v[k];
            g_v.v[k] = phi0.eval(ww) - phi0.eval(uu);
            g_w.v[k] += shift.ell * uu - phi0.eval(ww);
        }
        GridFunction g_u = *ctx.f;
        for (std::size_t k = 0; k < g_u.v.size(); ++k) g_u.v[k] -= phi.eval(u_state.u.v[k]);

        imex_step_forced(u_state, ctx, g_u);
        imex_step_forced(v_state, ctx, g_v);
        imex_step_forced(w_state, ctx, g_w);
        if (n % sample_every == 0 || n == nsteps) record(n);
    }

    // Pure-exponential log-linear fit of ||(v,xi)||_{H0} over the samples.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long cnt = 0;
    for (const auto& s : out.samples) {
        if (s.l_h0_sq <= 0.0) continue;
        const double y = 0.5 * std::log(s.l_h0_sq);
        sx += s.t;
        sy += y;
        sxx += s.t * s.t;
        sxy += s.t * y;
        ++cnt;
    }
    if (cnt >= 2) {
        const double denom = cnt * sxx - sx * sx;
        if (denom > 0.0) out.fitted_decay_rate = -(cnt * sxy - sx * sy) / denom;
    }
    return out;
}

} // namespace memoryheat
