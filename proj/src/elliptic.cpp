#include "memoryheat/elliptic.hpp"

#include <cmath>

#include "memoryheat/rng.hpp"

namespace memoryheat {

constexpr std::array<std::pair<int, int>, DiscreteOperator::kBands> DiscreteOperator::kOffsets;

namespace {

// Gradients of the four bilinear basis functions at the four cell corners,
// in units of (1/hx, 1/hy). Local node / corner order: (0,0),(1,0),(0,1),(1,1).
struct LocalGrad {
    double gx[4][4];
    double gy[4][4];
    constexpr LocalGrad() : gx{}, gy{} {
        // node 0
        gx[0][0] = -1; gy[0][0] = -1;
        gx[0][1] = -1; gy[0][1] = 0;
        gx[0][2] = 0;  gy[0][2] = -1;
        // node 1
        gx[1][0] = 1;  gy[1][0] = 0;
        gx[1][1] = 1;  gy[1][1] = -1;
        gx[1][3] = 0;  gy[1][3] = -1;
        // node 2
        gx[2][0] = 0;  gy[2][0] = 1;
        gx[2][2] = -1; gy[2][2] = 1;
        gx[2][3] = -1; gy[2][3] = 0;
        // node 3
        gx[3][1] = 0;  gy[3][1] = 1;
        gx[3][2] = 1;  gy[3][2] = 0;
        gx[3][3] = 1;  gy[3][3] = 1;
    }
};
constexpr LocalGrad kGrad{};

} // namespace

DiscreteOperator assemble(const ConductivityTensor& sigma, const Grid& grid) {
    if (sigma.grid != grid) throw ConfigError("elliptic", "sigma grid does not match");
    DiscreteOperator A;
    A.grid_ = grid;
    A.m_k_ = sigma.m_k;
    A.M_k_ = sigma.M_k;
    for (auto& b : A.band_) b.assign(grid.interior_count(), 0.0);

    const double hx = grid.hx(), hy = grid.hy();
    const double ax = 1.0 / hx, ay = 1.0 / hy;
    const double wq = 0.25 * hx * hy; // corner quadrature weight

    // Band lookup by offset (di+1, dj+1) -> band index.
    int band_of[3][3];
    for (int b = 0; b < DiscreteOperator::kBands; ++b) {
        const auto [di, dj] = DiscreteOperator::kOffsets[b];
        band_of[di + 1][dj + 1] = b;
    }

    for (int cj = 0; cj < grid.ny; ++cj) {
        for (int ci = 0; ci < grid.nx; ++ci) {
            // Cell conductivity: average of the 4 corner nodes.
            const std::size_t n00 = grid.node_index(ci, cj);
            const std::size_t n10 = grid.node_index(ci + 1, cj);
            const std::size_t n01 = grid.node_index(ci, cj + 1);
            const std::size_t n11 = grid.node_index(ci + 1, cj + 1);
            const double s11 =
                0.25 * (sigma.a11[n00] + sigma.a11[n10] + sigma.a11[n01] + sigma.a11[n11]);
            const double s12 =
                0.25 * (sigma.a12[n00] + sigma.a12[n10] + sigma.a12[n01] + sigma.a12[n11]);
            const double s22 =
                0.25 * (sigma.a22[n00] + sigma.a22[n10] + sigma.a22[n01] + sigma.a22[n11]);

            double K[4][4];
            for (int a = 0; a < 4; ++a) {
                for (int b = a; b < 4; ++b) {
                    double acc = 0.0;
                    for (int q = 0; q < 4; ++q) {
                        const double gax = kGrad.gx[a][q] * ax, gay = kGrad.gy[a][q] * ay;
                        const double gbx = kGrad.gx[b][q] * ax, gby = kGrad.gy[b][q] * ay;
                        acc += s11 * gax * gbx + s12 * (gax * gby + gay * gbx) +
                               s22 * gay * gby;
                    }
                    K[a][b] = K[b][a] = wq * acc;
                }
            }

            const int gi[4] = {ci, ci + 1, ci, ci + 1};
            const int gj[4] = {cj, cj, cj + 1, cj + 1};
            for (int a = 0; a < 4; ++a) {
                const int ia = gi[a], ja = gj[a];
                if (ia <= 0 || ia >= grid.nx || ja <= 0 || ja >= grid.ny) continue;
                const std::size_t row = grid.interior_index(ia, ja);
                for (int b = 0; b < 4; ++b) {
                    const int ib = gi[b], jb = gj[b];
                    if (ib <= 0 || ib >= grid.nx || jb <= 0 || jb >= grid.ny) continue;
                    A.band_[band_of[ib - ia + 1][jb - ja + 1]][row] += K[a][b];
                }
            }
        }
    }
    return A;
}

void DiscreteOperator::apply_form(const GridFunction& x, GridFunction& y) const {
    if (x.grid != grid_) throw ConfigError("elliptic", "grid mismatch in apply");
    if (y.grid != grid_) y = GridFunction(grid_);
    const int nix = grid_.nix(), niy = grid_.niy();
    for (int j = 1; j <= niy; ++j) {
        for (int i = 1; i <= nix; ++i) {
            const std::size_t k = grid_.interior_index(i, j);
            double acc = band_[0][k] * x.v[k];
            for (int b = 1; b < kBands; ++b) {
                const auto [di, dj] = kOffsets[b];
                const int ii = i + di, jj = j + dj;
                if (ii < 1 || ii > nix || jj < 1 || jj > niy) continue;
                acc += band_[b][k] * x.v[grid_.interior_index(ii, jj)];
            }
            y.v[k] = acc;
        }
    }
}

void DiscreteOperator::apply(const GridFunction& x, GridFunction& y) const {
    apply_form(x, y);
    const double inv_mass = 1.0 / mass_weight();
    for (double& v : y.v) v *= inv_mass;
}

GridFunction DiscreteOperator::apply(const GridFunction& x) const {
    GridFunction y(grid_);
    apply(x, y);
    return y;
}

double DiscreteOperator::form_value(const GridFunction& u) const {
    GridFunction t(grid_);
    apply_form(u, t);
    return dot_raw(u, t);
}

CgResult conjugate_gradient(const std::function<void(const GridFunction&, GridFunction&)>& apply,
                            const GridFunction& rhs, GridFunction& x, double tol, bool jacobi,
                            const GridFunction* diag) {
    CgResult res;
    const double rhs_norm = std::sqrt(dot_raw(rhs, rhs));
    if (rhs_norm == 0.0) {
        x = GridFunction(rhs.grid);
        res.converged = true;
        return res;
    }
    if (x.v.size() != rhs.v.size()) x = GridFunction(rhs.grid);

    GridFunction r(rhs.grid), Ap(rhs.grid);
    apply(x, Ap);
    r = rhs;
    r -= Ap;

    auto precond = [&](const GridFunction& in, GridFunction& out) {
        if (jacobi && diag) {
            out = in;
            for (std::size_t k = 0; k < out.v.size(); ++k) out.v[k] /= diag->v[k];
        } else {
            out = in;
        }
    };

    GridFunction z(rhs.grid);
    precond(r, z);
    GridFunction p = z;
    double rz = dot_raw(r, z);
    const long cap = 20 * static_cast<long>(rhs.v.size());

    double rnorm = std::sqrt(dot_raw(r, r));
    for (long it = 0; it < cap && rnorm > tol * rhs_norm; ++it) {
        apply(p, Ap);
        const double pAp = dot_raw(p, Ap);
        if (!(pAp > 0.0)) break; // lost SPD: bail and report
        const double alpha = rz / pAp;
        axpy(alpha, p, x);
        axpy(-alpha, Ap, r);
        precond(r, z);
        const double rz_new = dot_raw(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t k = 0; k < p.v.size(); ++k) p.v[k] = z.v[k] + beta * p.v[k];
        rnorm = std::sqrt(dot_raw(r, r));
        res.iterations = static_cast<int>(it + 1);
    }
    res.relative_residual = rnorm / rhs_norm;
    res.converged = res.relative_residual <= tol;
    return res;
}

GridFunction solve(const DiscreteOperator& A, const GridFunction& g, double tol,
                   const GridFunction* x0) {
    if (g.grid != A.grid()) throw ConfigError("elliptic", "grid mismatch in solve");
    if (!(tol > 0.0)) throw ConfigError("elliptic", "solve tol must be > 0");
    if (!all_finite(g)) throw NumericError(0, "non-finite right-hand side in solve");
    GridFunction x = x0 ? *x0 : GridFunction(A.grid());
    auto apply = [&](const GridFunction& in, GridFunction& out) { A.apply(in, out); };
    const CgResult cg = conjugate_gradient(apply, g, x, tol);
    if (!cg.converged)
        throw NumericError(cg.iterations, "CG did not reach tolerance (relative residual " +
                                              std::to_string(cg.relative_residual) + ")");
    return x;
}

double v_norm_sq(const DiscreteOperator& A, const GridFunction& u, int r) {
    switch (r) {
    case 0:
        return dot_l2(u, u);
    case 1:
        return A.form_value(u);
    case 2: {
        const GridFunction Au = A.apply(u);
        return dot_l2(Au, Au);
    }
    case 3: {
        const GridFunction Au = A.apply(u);
        return A.form_value(Au);
    }
    default:
        throw ConfigError("elliptic", "v_norm supports r in {0,1,2,3}");
    }
}

double v_norm(const DiscreteOperator& A, const GridFunction& u, int r) {
    return std::sqrt(std::max(0.0, v_norm_sq(A, u, r)));
}

double v_dot(const DiscreteOperator& A, const GridFunction& u, const GridFunction& v, int r) {
    switch (r) {
    case 0:
        return dot_l2(u, v);
    case 1: {
        GridFunction t(u.grid);
        A.apply_form(u, t);
        return dot_raw(t, v);
    }
    case 2:
        return dot_l2(A.apply(u), A.apply(v));
    default:
        throw ConfigError("elliptic", "v_dot supports r in {0,1,2}");
    }
}

double smallest_eigenvalue(const DiscreteOperator& A, double tol) {
    Rng rng(0x5eedul);
    GridFunction x = random_field(A.grid(), rng);
    x *= 1.0 / norm_l2(x);
    double lambda = v_norm_sq(A, x, 1) / dot_l2(x, x);
    const int cap = 500;
    for (int it = 0; it < cap; ++it) {
        GridFunction y = solve(A, x, 1e-12, &x);
        y *= 1.0 / norm_l2(y);
        const double lambda_new = v_norm_sq(A, y, 1) / dot_l2(y, y);
        x = std::move(y);
        if (std::abs(lambda_new - lambda) <= tol * std::abs(lambda_new)) return lambda_new;
        lambda = lambda_new;
    }
    throw NumericError(cap, "inverse power iteration did not converge");
}

} // namespace memoryheat
