#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

#include "memoryheat/errors.hpp"

namespace memoryheat {

// Uniform rectangle grid: nx x ny cells on [0,Lx] x [0,Ly].
// Unknowns live at the (nx-1)(ny-1) interior nodes; homogeneous Dirichlet
// values on the boundary are implicit and never stored.
struct Grid {
    int nx = 0;
    int ny = 0;
    double Lx = 1.0;
    double Ly = 1.0;

    double hx() const { return Lx / nx; }
    double hy() const { return Ly / ny; }
    int nix() const { return nx - 1; } // interior nodes in x
    int niy() const { return ny - 1; }
    std::size_t interior_count() const {
        return static_cast<std::size_t>(nix()) * static_cast<std::size_t>(niy());
    }
    std::size_t node_count() const {
        return static_cast<std::size_t>(nx + 1) * static_cast<std::size_t>(ny + 1);
    }
    // Interior node (i,j), i in [1,nx-1], j in [1,ny-1], row-major in j.
    std::size_t interior_index(int i, int j) const {
        return static_cast<std::size_t>(j - 1) * nix() + (i - 1);
    }
    // All-nodes index, i in [0,nx], j in [0,ny].
    std::size_t node_index(int i, int j) const {
        return static_cast<std::size_t>(j) * (nx + 1) + i;
    }
    double x(int i) const { return i * hx(); }
    double y(int j) const { return j * hy(); }

    bool operator==(const Grid& o) const {
        return nx == o.nx && ny == o.ny && Lx == o.Lx && Ly == o.Ly;
    }
    bool operator!=(const Grid& o) const { return !(*this == o); }

    void validate() const {
        if (nx < 2 || ny < 2) throw ConfigError("grid", "nx and ny must be >= 2");
        if (!(Lx > 0.0) || !(Ly > 0.0)) throw ConfigError("grid", "Lx and Ly must be > 0");
    }
};

// Real scalar field on the interior nodes of a Grid, Dirichlet-0 boundary.
struct GridFunction {
    Grid grid;
    std::vector<double> v;

    GridFunction() = default;
    explicit GridFunction(const Grid& g, double fill = 0.0)
        : grid(g), v(g.interior_count(), fill) {}

    double& at(int i, int j) { return v[grid.interior_index(i, j)]; }
    double at(int i, int j) const { return v[grid.interior_index(i, j)]; }

    // Value with the Dirichlet boundary made explicit (0 outside interior).
    double at_node(int i, int j) const {
        if (i <= 0 || i >= grid.nx || j <= 0 || j >= grid.ny) return 0.0;
        return v[grid.interior_index(i, j)];
    }

    std::size_t size() const { return v.size(); }

    GridFunction& operator+=(const GridFunction& o) {
        assert(v.size() == o.v.size());
        for (std::size_t k = 0; k < v.size(); ++k) v[k] += o.v[k];
        return *this;
    }
    GridFunction& operator-=(const GridFunction& o) {
        assert(v.size() == o.v.size());
        for (std::size_t k = 0; k < v.size(); ++k) v[k] -= o.v[k];
        return *this;
    }
    GridFunction& operator*=(double a) {
        for (double& x : v) x *= a;
        return *this;
    }
};

inline GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
inline GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
inline GridFunction operator*(double a, GridFunction u) { return u *= a; }

// y += a*x
inline void axpy(double a, const GridFunction& x, GridFunction& y) {
    assert(x.v.size() == y.v.size());
    for (std::size_t k = 0; k < x.v.size(); ++k) y.v[k] += a * x.v[k];
}

inline double dot_raw(const GridFunction& a, const GridFunction& b) {
    assert(a.v.size() == b.v.size());
    double s = 0.0;
    for (std::size_t k = 0; k < a.v.size(); ++k) s += a.v[k] * b.v[k];
    return s;
}

// L2 inner product with the hx*hy mass convention.
inline double dot_l2(const GridFunction& a, const GridFunction& b) {
    return dot_raw(a, b) * a.grid.hx() * a.grid.hy();
}

inline double norm_l2(const GridFunction& a) { return std::sqrt(dot_l2(a, a)); }

inline double norm_linf(const GridFunction& a) {
    double m = 0.0;
    for (double x : a.v) m = std::max(m, std::abs(x));
    return m;
}

inline bool all_finite(const GridFunction& a) {
    for (double x : a.v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace memoryheat
