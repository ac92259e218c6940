#pragma once

#include <array>
#include <functional>
#include <vector>

#include "memoryheat/conductivity.hpp"
#include "memoryheat/grid.hpp"

namespace memoryheat {

// Discrete divergence-form operator A_mu = -div(sigma_mu grad .) with
// homogeneous Dirichlet conditions: Q1 Galerkin assembly, sigma piecewise
// constant per cell (average of the 4 corner nodes), corner quadrature for
// the gradient products. For sigma = I this reduces to the classical 5-point
// Laplacian. Stored as a 9-band stencil over interior nodes in bilinear-form
// convention; apply() divides by the hx*hy mass weight.
class DiscreteOperator {
public:
    // Band offsets (di,dj) in row-major j: C,E,W,N,S,NE,NW,SE,SW.
    static constexpr int kBands = 9;
    static constexpr std::array<std::pair<int, int>, kBands> kOffsets = {{
        {0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, 1}, {1, -1}, {-1, -1},
    }};

    const Grid& grid() const { return grid_; }
    double mass_weight() const { return grid_.hx() * grid_.hy(); }
    double m_k() const { return m_k_; }
    double M_k() const { return M_k_; }

    // Bilinear-form matrix entry between interior node (i,j) and its
    // neighbor at offset b (the "stencil scaled by hx*hy mass convention").
    double form_entry(int i, int j, int b) const {
        return band_[b][grid_.interior_index(i, j)];
    }

    // y = A_mu x (operator convention, L2 mass divided out).
    void apply(const GridFunction& x, GridFunction& y) const;
    GridFunction apply(const GridFunction& x) const;

    // y = form-matrix * x (no mass division); <A x, x>_{L2} = dot_raw(x, form*x).
    void apply_form(const GridFunction& x, GridFunction& y) const;

    double form_value(const GridFunction& u) const; // a_mu(u,u)

    friend DiscreteOperator assemble(const ConductivityTensor& sigma, const Grid& grid);

private:
    Grid grid_;
    std::array<std::vector<double>, kBands> band_;
    double m_k_ = 1.0;
    double M_k_ = 1.0;
};

DiscreteOperator assemble(const ConductivityTensor& sigma, const Grid& grid);

struct CgResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

// Unpreconditioned CG (optionally Jacobi) for an SPD operator given as a
// mat-vec callback. Relative residual stop, iteration cap 20*n.
CgResult conjugate_gradient(const std::function<void(const GridFunction&, GridFunction&)>& apply,
                            const GridFunction& rhs, GridFunction& x, double tol,
                            bool jacobi = false, const GridFunction* diag = nullptr);

// Solve A u = g to relative residual tol. Throws NumericError on
// non-convergence. `x0` seeds the iteration when provided.
GridFunction solve(const DiscreteOperator& A, const GridFunction& g, double tol,
                   const GridFunction* x0 = nullptr);

// Integer Hilbert-scale norms:
//   r=0: ||u||_{L2};  r=1: sqrt(a_mu(u,u));  r=2: ||A u||_{L2};
//   r=3: sqrt(a_mu(Au,Au)).
double v_norm(const DiscreteOperator& A, const GridFunction& u, int r);
double v_norm_sq(const DiscreteOperator& A, const GridFunction& u, int r);

// Scale-r inner product <u,v>_{V^r} for r in {0,1,2}.
double v_dot(const DiscreteOperator& A, const GridFunction& u, const GridFunction& v, int r);

// Smallest eigenvalue by inverse power iteration (CG inner solves);
// converged when the Rayleigh quotient moves less than tol relatively.
double smallest_eigenvalue(const DiscreteOperator& A, double tol = 1e-10);

} // namespace memoryheat
