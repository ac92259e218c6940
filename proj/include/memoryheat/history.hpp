#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "memoryheat/elliptic.hpp"
#include "memoryheat/grid.hpp"
#include "memoryheat/kernel.hpp"

namespace memoryheat {

// Geometric quadrature grid on (0, s_max], dense near 0 where the kernel
// weight concentrates. Node 0 of the hat basis sits at s=0 with value 0
// (trace condition eta(0) = 0).
struct SGrid {
    std::vector<double> s; // ascending, s.back() == s_max
    double s_max = 0.0;

    static SGrid geometric(double s_max, double s_min, int nodes_per_decade);
};

// Default node density: scales like dt^{-1/2} so the s-quadrature error of
// the ring-buffer memory term shrinks linearly with dt.
int nodes_per_decade_for(double dt);

// Nodal quadrature weights W_i = int w(s) hat_i(s) ds for kernel-type weight
// functions w. For exponential-sum kernels the integrals are closed-form
// (product rule, exact in w); sampled kernels fall back to w(s_i) * trapezoid.
// Right-translating the history by t multiplies mode j's weights by
// exp(-a_j t), which keeps the translation-contraction property exact at the
// quadrature level.
class SQuadrature {
public:
    SQuadrature(std::shared_ptr<const MemoryKernel> kernel, SGrid sgrid);

    const SGrid& sgrid() const { return sgrid_; }
    const MemoryKernel& kernel() const { return *kernel_; }
    std::shared_ptr<const MemoryKernel> kernel_ptr() const { return kernel_; }

    // Weights against h (memory norms) and kappa (tail functional), for a
    // history right-translated by `shift`.
    std::vector<double> weights_h(double shift = 0.0) const;
    std::vector<double> weights_kappa(double shift = 0.0) const;
    // Weights against a*exp(-a s) (mode-bank projection of eta0).
    std::vector<double> weights_mode(double rate) const;

private:
    std::shared_ptr<const MemoryKernel> kernel_;
    SGrid sgrid_;
    std::vector<double> trap_w_;                     // plain hat masses
    std::vector<std::vector<double>> mode_w_h_;      // [mode][node]
    std::vector<std::vector<double>> mode_w_kappa_;  // [mode][node]
};

// Initial past history u0(x, t<=0) in the forms the scenario schema admits.
struct PastHistory {
    enum class Kind { Zero, ConstantPast, ExpPast, Custom };
    Kind kind = Kind::Zero;
    GridFunction profile;  // u_f for ConstantPast, g for ExpPast
    double rate = 1.0;     // ExpPast: u(.,t) = exp(rate*t) * g, t <= 0
    std::function<GridFunction(double)> custom; // u(., -y) for y >= 0

    static PastHistory zero() { return {}; }
    static PastHistory constant(GridFunction u);
    static PastHistory exponential(double rate, GridFunction g);
};

// Exact realization of the two-branch representation of eta^t from stored
// past u-snapshots plus the sampled initial history. Supports the norm and
// tail quadratures; owns a pure-translation offset so the right-translation
// semigroup acts without resampling.
class RingBufferHistory {
public:
    RingBufferHistory(const Grid& grid, std::shared_ptr<const SQuadrature> quad, double dt);

    void set_initial_history(const PastHistory& past);

    const Grid& grid() const { return grid_; }
    const SQuadrature& quadrature() const { return *quad_; }
    std::shared_ptr<const SQuadrature> quadrature_ptr() const { return quad_; }
    double dt() const { return dt_; }
    double t_elapsed() const { return t_elapsed_; }
    double shift() const { return shift_; }
    bool pure() const { return u_hist_.empty(); }

    // One transport step with u frozen over (t, t+dt].
    void evolve(const GridFunction& u_new, double dt);

    // Right-translation e^{tT}; only defined before any source was applied.
    RingBufferHistory translate(double t) const;

    // eta^t at a single point / at every s-node.
    GridFunction eval(double s) const;
    std::vector<GridFunction> eval_all() const;

    // integral h(s) A eta(s) ds, one stencil application on the quadrature sum.
    GridFunction memory_term(const DiscreteOperator& A) const;

    double m_norm_sq(const DiscreteOperator& A, int r) const;
    // Tail functional U_r[eta] = 1/2 integral kappa ||eta||_{V^r}^2.
    double tail_u(const DiscreteOperator& A, int r) const;
    // integral kappa(s) <u, eta(s)>_{V^r} ds (right side of the tail identity).
    double kappa_cross(const DiscreteOperator& A, const GridFunction& u, int r) const;

private:
    GridFunction eta0_interp(double s) const; // shift-aware
    void materialize_shift();

    Grid grid_;
    std::shared_ptr<const SQuadrature> quad_;
    double dt_ = 0.0;
    double t_elapsed_ = 0.0;
    double shift_ = 0.0;
    std::vector<GridFunction> eta0_;   // at s-nodes; empty means identically 0
    std::deque<GridFunction> u_hist_;  // newest first, window of length s_max
    GridFunction u_total_;             // int_0^t u(t-y) dy
    std::size_t capacity_ = 0;
};

struct MemoryNormReport {
    int r = 1;
    double m_norm = 0.0;
    double m_norm_sq = 0.0;
    double tail_u = 0.0;
};

MemoryNormReport m_norm(const RingBufferHistory& eta, const DiscreteOperator& A, int r);

// Sum-of-exponentials reduction: one field per kernel mode, evolved by the
// exact integrating-factor step of zeta_j' = -a_j zeta_j + u with u frozen
// over the step. Exact in s; the s-quadrature-free reference for the memory
// term.
class ModeBankHistory {
public:
    ModeBankHistory(const Grid& grid, std::shared_ptr<const MemoryKernel> kernel);

    void set_initial_history(const PastHistory& past, const SQuadrature* quad = nullptr);

    const std::vector<GridFunction>& zeta() const { return zeta_; }
    std::vector<GridFunction>& zeta() { return zeta_; }
    const MemoryKernel& kernel() const { return *kernel_; }
    std::shared_ptr<const MemoryKernel> kernel_ptr() const { return kernel_; }

    void evolve(const GridFunction& u_new, double dt);
    GridFunction weighted_sum() const; // sum_j b_j a_j zeta_j
    GridFunction memory_term(const DiscreteOperator& A) const;

private:
    Grid grid_;
    std::shared_ptr<const MemoryKernel> kernel_;
    std::vector<GridFunction> zeta_;
};

// Residual of the discrete tail identity along a uniformly sampled
// trajectory: max_n | dU/dt + 1/2 ||eta||^2_{M^r} - int kappa <u, eta>_{V^r} |
// with the non-difference terms averaged between consecutive samples.
struct TailSample {
    double tail_u = 0.0;
    double m_norm_sq = 0.0;
    double cross = 0.0;
};

TailSample tail_sample(const RingBufferHistory& eta, const DiscreteOperator& A,
                       const GridFunction& u, int r);
double tail_identity_residual(const std::vector<TailSample>& samples, double dt);

} // namespace memoryheat
