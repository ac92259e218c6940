#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "memoryheat/elliptic.hpp"
#include "memoryheat/grid.hpp"
#include "memoryheat/history.hpp"
#include "memoryheat/nonlinearity.hpp"

namespace memoryheat {

// Phase-space point of (CGB): temperature u plus the Dafermos history in one
// or both representations (mode bank for stepping, ring buffer for norms).
struct SystemState {
    GridFunction u;
    std::optional<ModeBankHistory> modes;
    std::optional<RingBufferHistory> ring;
    double t = 0.0;

    bool has_history() const { return modes.has_value() || ring.has_value(); }
};

enum class HistoryRepr { ModeBank, RingBuffer, Both };

SystemState make_state(GridFunction u0, const PastHistory& past,
                       std::shared_ptr<const MemoryKernel> kernel,
                       std::shared_ptr<const SQuadrature> quad, double dt, HistoryRepr repr);

struct StepContext {
    const DiscreteOperator* A = nullptr;
    const Nonlinearity* phi = nullptr;
    const GridFunction* f = nullptr; // time-independent forcing
    double dt = 0.0;
    double cg_tol = 1e-10;
};

// Memory term of the state: mode bank when present (exact in s), ring-buffer
// quadrature otherwise.
GridFunction state_memory_term(const SystemState& state, const DiscreteOperator& A);

// One IMEX step: implicit in A_mu, explicit in phi and the memory term,
//   (I/dt + A) u^{n+1} = u^n/dt + f - phi(u^n) - memory_term(eta^n),
// then the history advances with u := u^{n+1} frozen over the step.
// The inner CG is warm-started from u^n. Throws NumericError on NaN/solver
// failure (step index taken from state.t/dt).
void imex_step(SystemState& state, const StepContext& ctx);

// Same linear solve with a caller-supplied explicit forcing g (decomposition
// systems reuse the stepper with their own couplings).
void imex_step_forced(SystemState& state, const StepContext& ctx, const GridFunction& g_expl);

// March nsteps, invoking on_sample(state, step) after every sample_every
// steps (and at step 0 before stepping).
void run_trajectory(SystemState& state, const StepContext& ctx, long nsteps, long sample_every,
                    const std::function<void(const SystemState&, long)>& on_sample);

// z_f = (u_f, s u_f) with u_f = 1/2 A^{-1} f; stationary when phi = 0.
SystemState steady_state(const DiscreteOperator& A, const GridFunction& f,
                         std::shared_ptr<const MemoryKernel> kernel,
                         std::shared_ptr<const SQuadrature> quad, double dt,
                         HistoryRepr repr = HistoryRepr::Both, double tol = 1e-12);

// Residual || A u_f + memory_term(eta_f) - f ||_{L2} of the stationarity
// equation (uses int s h = 1 through the history representation).
double stationarity_residual(const SystemState& zf, const DiscreteOperator& A,
                             const GridFunction& f);

// Coupled L/K decomposition run: (v,xi) carries the data and decays, (w,zeta)
// carries the forcing and stays H^1-bounded. All three trajectories advance
// with the shared stepper; the L-forcing phi0(w)-phi0(u) references the full
// solution.
struct DecompositionSample {
    double t = 0.0;
    double sum_err = 0.0;  // ||(v+w) - u||_{V0}
    double l_h0_sq = 0.0;  // ||(v,xi)||_{H0}^2
    double k_h1_sq = 0.0;  // ||(w,zeta)||_{H1}^2
    double u_h0_sq = 0.0;
};

struct DecompositionResult {
    std::vector<DecompositionSample> samples;
    double max_sum_err = 0.0;
    double fitted_decay_rate = 0.0; // log-linear fit of ||(v,xi)||_{H0}
    double sup_k_h1 = 0.0;          // sup_t ||(w,zeta)||_{H1}
};

DecompositionResult decomposition_run(const SystemState& initial, const StepContext& ctx,
                                      const MonotoneShift& shift, long nsteps,
                                      long sample_every);

} // namespace memoryheat
