#pragma once

#include <vector>

#include "memoryheat/dynamics.hpp"
#include "memoryheat/elliptic.hpp"
#include "memoryheat/history.hpp"

namespace memoryheat {

// E_{r,nu} = ||u||_{V^r}^2 + ||eta||_{M^{r+1}}^2 + 2 nu U_{r+1}[eta], together
// with the norm menu of the state. Equivalent to the H^r norm within the
// factor (1 + 2 nu Theta); the constructor asserts the band.
struct EnergyReport {
    int r = 0;
    double nu = 0.0;
    double E = 0.0;
    double u_norms[4] = {0, 0, 0, 0}; // V^0..V^3
    double eta_norm_m1 = 0.0;
    double eta_norm_m2 = 0.0;
    double tail_u = 0.0; // U_{r+1}
    double h_norm_sq = 0.0; // ||(u,eta)||_{H^r}^2
    double t = 0.0;
};

double default_nu(const MemoryKernel& kernel);

EnergyReport energy(const SystemState& state, const DiscreteOperator& A, int r, double nu);

// Per-step residual of the damped energy inequality
//   dE/dt + (1-nu) ||u||_{V^{r+1}}^2 + nu^2 E <= 2 <g,u>_{V^r},
// evaluated with midpoint (trapezoid) averaging of the non-difference terms.
// The positive part is the inequality violation and must vanish as dt -> 0.
struct EnergySample {
    double t = 0.0;
    double E = 0.0;
    double u_vr1_sq = 0.0; // ||u||_{V^{r+1}}^2
    double g_dot_u = 0.0;  // <g,u>_{V^r}
};

EnergySample energy_sample(const SystemState& state, const DiscreteOperator& A, int r,
                           double nu, const GridFunction& g);

std::vector<double> energy_inequality_residual(const std::vector<EnergySample>& samples,
                                               double nu);
double positive_part_max(const std::vector<double>& residuals);

// Least-squares fit of value ~ I exp(-c t) + C: C from the tail mean, then a
// log-linear fit of (value - C). c is reported as fitted (sign unconstrained);
// unreliable when most of the shifted series is nonpositive.
struct FitResult {
    double I = 0.0;
    double c = 0.0;
    double C = 0.0;
    double rms_residual = 0.0;
    bool reliable = false;
};

FitResult fit_absorbing(const std::vector<double>& t, const std::vector<double>& value);

// sqrt(t) * ||S(t)z||_V over geometrically sampled t in (0, t_end]; the
// caller asserts boundedness / dt-stability of the max.
struct SmoothingPoint {
    double t = 0.0;
    double v_norm = 0.0;       // ||(u,eta)||_V
    double sqrt_t_v_norm = 0.0;
};

double v_state_norm(const SystemState& state, const DiscreteOperator& A); // V^2 x M^2

// Windowed Riemann sums of ||u||_inf^{r_exp} over consecutive windows.
struct WindowAverage {
    double t_start = 0.0;
    double value = 0.0;
};

std::vector<WindowAverage> linfty_time_average(const std::vector<double>& t,
                                               const std::vector<double>& linf, double r_exp,
                                               double window = 1.0);

// One-sided Hausdorff distance max_{a in A} min_{b in B} ||a-b|| in the
// requested phase-space norm (r = 0 -> H^0, r = 1 -> H^1, r = 2 -> V).
// States are materialized on a common s-grid.
struct MaterializedState {
    GridFunction u;
    std::vector<GridFunction> eta; // at the s-nodes of the shared quadrature
};

MaterializedState materialize(const SystemState& state);

double pair_distance(const MaterializedState& a, const MaterializedState& b,
                     const DiscreteOperator& A, const SQuadrature& quad, int r);

double attraction_distance(const std::vector<MaterializedState>& ensemble,
                           const std::vector<MaterializedState>& target,
                           const DiscreteOperator& A, const SQuadrature& quad, int r);

} // namespace memoryheat
