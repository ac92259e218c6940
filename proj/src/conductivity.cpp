#include "memoryheat/conductivity.hpp"

#include <algorithm>
#include <cmath>

namespace memoryheat {

namespace {
constexpr double kDegeneracyGap = 1e-8; // reject |mu| >= 1 - this
}

BeltramiField make_beltrami_field(const Grid& grid, std::vector<std::complex<double>> values) {
    grid.validate();
    if (values.size() != grid.node_count())
        throw ConfigError("mu", "value count does not match grid node count");
    double worst = 0.0;
    int worst_i = 0, worst_j = 0;
    for (int j = 0; j <= grid.ny; ++j) {
        for (int i = 0; i <= grid.nx; ++i) {
            const double a = std::abs(values[grid.node_index(i, j)]);
            if (!std::isfinite(a)) throw ConfigError("mu", "non-finite value at node");
            if (a > worst) {
                worst = a;
                worst_i = i;
                worst_j = j;
            }
        }
    }
    if (worst >= 1.0 - kDegeneracyGap) {
        throw ConfigError("mu", "|mu| = " + std::to_string(worst) + " at node (" +
                                    std::to_string(worst_i) + "," + std::to_string(worst_j) +
                                    ") violates |mu| < 1 - 1e-8");
    }
    BeltramiField f;
    f.grid = grid;
    f.values = std::move(values);
    f.k_bound = worst;
    return f;
}

ConductivityTensor conductivity_from_beltrami(const BeltramiField& mu) {
    ConductivityTensor s;
    s.grid = mu.grid;
    const std::size_t n = mu.grid.node_count();
    s.a11.resize(n);
    s.a12.resize(n);
    s.a22.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::complex<double> m = mu.values[k];
        const double d = 1.0 - std::norm(m);
        s.a11[k] = std::norm(1.0 - m) / d;
        s.a12[k] = -2.0 * m.imag() / d;
        s.a22[k] = std::norm(1.0 + m) / d;
    }
    s.k_bound = mu.k_bound;
    s.m_k = ellipticity_lower(mu.k_bound);
    s.M_k = ellipticity_upper(mu.k_bound);
    return s;
}

EllipticityReport ellipticity_report(const ConductivityTensor& sigma) {
    EllipticityReport r;
    r.min_eig = std::numeric_limits<double>::infinity();
    r.max_eig = 0.0;
    for (std::size_t k = 0; k < sigma.a11.size(); ++k) {
        const double a = sigma.a11[k], b = sigma.a12[k], c = sigma.a22[k];
        const double tr = a + c;
        const double disc = std::sqrt(std::max(0.0, (a - c) * (a - c) + 4.0 * b * b));
        r.min_eig = std::min(r.min_eig, 0.5 * (tr - disc));
        r.max_eig = std::max(r.max_eig, 0.5 * (tr + disc));
        r.max_det_error = std::max(r.max_det_error, std::abs(a * c - b * b - 1.0));
    }
    return r;
}

BeltramiField beltrami_constant(const Grid& grid, std::complex<double> mu) {
    return make_beltrami_field(grid, std::vector<std::complex<double>>(grid.node_count(), mu));
}

BeltramiField beltrami_checkerboard(const Grid& grid, double k, int tiles) {
    if (tiles < 1) throw ConfigError("mu.checkerboard.tiles", "must be >= 1");
    std::vector<std::complex<double>> vals(grid.node_count());
    for (int j = 0; j <= grid.ny; ++j) {
        for (int i = 0; i <= grid.nx; ++i) {
            // Tile index from the node position; nodes on a tile edge take the
            // lower tile so the field stays piecewise constant per cell.
            const int ti = std::min(tiles - 1, static_cast<int>(grid.x(i) / grid.Lx * tiles));
            const int tj = std::min(tiles - 1, static_cast<int>(grid.y(j) / grid.Ly * tiles));
            vals[grid.node_index(i, j)] = ((ti + tj) % 2 == 0) ? k : -k;
        }
    }
    return make_beltrami_field(grid, std::move(vals));
}

BeltramiField beltrami_radial(const Grid& grid, double k) {
    std::vector<std::complex<double>> vals(grid.node_count());
    const double cx = 0.5 * grid.Lx, cy = 0.5 * grid.Ly;
    const double rmax = std::hypot(cx, cy);
    for (int j = 0; j <= grid.ny; ++j) {
        for (int i = 0; i <= grid.nx; ++i) {
            const double dx = grid.x(i) - cx, dy = grid.y(j) - cy;
            const double r = std::hypot(dx, dy) / rmax;
            const double phase = std::atan2(dy, dx);
            vals[grid.node_index(i, j)] =
                k * r * std::complex<double>(std::cos(phase), std::sin(phase));
        }
    }
    return make_beltrami_field(grid, std::move(vals));
}

} // namespace memoryheat
