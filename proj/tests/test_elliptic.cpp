#include <doctest.h>

#include <cmath>

#include "memoryheat/elliptic.hpp"
#include "memoryheat/rng.hpp"

using namespace memoryheat;

namespace {

DiscreteOperator laplacian(const Grid& g) {
    return assemble(conductivity_from_beltrami(beltrami_constant(g, {0.0, 0.0})), g);
}

// Exact smallest eigenvalue of the discrete 5-point Laplacian.
double lambda1_5pt(const Grid& g) {
    const double sx = std::sin(M_PI * g.hx() / (2.0 * g.Lx));
    const double sy = std::sin(M_PI * g.hy() / (2.0 * g.Ly));
    return 4.0 / (g.hx() * g.hx()) * sx * sx + 4.0 / (g.hy() * g.hy()) * sy * sy;
}

GridFunction eigenfunction(const Grid& g, int kx = 1, int ky = 1) {
    GridFunction u(g);
    for (int j = 1; j <= g.niy(); ++j)
        for (int i = 1; i <= g.nix(); ++i)
            u.at(i, j) = std::sin(kx * M_PI * g.x(i) / g.Lx) *
                         std::sin(ky * M_PI * g.y(j) / g.Ly);
    return u;
}

} // namespace

TEST_CASE("sigma = I on 3x3 interior nodes reproduces the 5-point stencil") {
    const Grid g{4, 4, 1.0, 1.0};
    const DiscreteOperator A = laplacian(g);
    const double mass = g.hx() * g.hy();
    // Hand-assembled oracle: form matrix = mass * (-Delta_h) stencil, with
    // couplings into the Dirichlet boundary eliminated.
    for (int j = 1; j <= 3; ++j) {
        for (int i = 1; i <= 3; ++i) {
            CHECK(A.form_entry(i, j, 0) ==
                  doctest::Approx(mass * (2.0 / (g.hx() * g.hx()) + 2.0 / (g.hy() * g.hy()))));
            CHECK(A.form_entry(i, j, 1) ==
                  doctest::Approx(i + 1 <= 3 ? -mass / (g.hx() * g.hx()) : 0.0));
            CHECK(A.form_entry(i, j, 2) ==
                  doctest::Approx(i - 1 >= 1 ? -mass / (g.hx() * g.hx()) : 0.0));
            CHECK(A.form_entry(i, j, 3) ==
                  doctest::Approx(j + 1 <= 3 ? -mass / (g.hy() * g.hy()) : 0.0));
            CHECK(A.form_entry(i, j, 4) ==
                  doctest::Approx(j - 1 >= 1 ? -mass / (g.hy() * g.hy()) : 0.0));
            CHECK(A.form_entry(i, j, 5) == doctest::Approx(0.0)); // no diagonal coupling
            CHECK(A.form_entry(i, j, 8) == doctest::Approx(0.0));
        }
    }
}

TEST_CASE("constant diagonal sigma separates into m x-part + M y-part") {
    const Grid g{8, 6, 1.0, 1.5};
    const double k = 0.4;
    const DiscreteOperator A =
        assemble(conductivity_from_beltrami(beltrami_constant(g, {k, 0.0})), g);
    const double m = ellipticity_lower(k), M = ellipticity_upper(k);
    const double ex = -m * g.hy() / g.hx();
    const double ey = -M * g.hx() / g.hy();
    for (int j = 2; j < g.niy(); ++j) {
        for (int i = 2; i < g.nix(); ++i) {
            CHECK(A.form_entry(i, j, 1) == doctest::Approx(ex).epsilon(1e-13));
            CHECK(A.form_entry(i, j, 2) == doctest::Approx(ex).epsilon(1e-13));
            CHECK(A.form_entry(i, j, 3) == doctest::Approx(ey).epsilon(1e-13));
            CHECK(A.form_entry(i, j, 4) == doctest::Approx(ey).epsilon(1e-13));
            CHECK(A.form_entry(i, j, 0) == doctest::Approx(-2.0 * (ex + ey)).epsilon(1e-13));
            CHECK(A.form_entry(i, j, 5) == doctest::Approx(0.0));
        }
    }
}

TEST_CASE("assembly writes exactly symmetric pairs") {
    const Grid g{12, 10, 1.3, 0.9};
    Rng rng(3);
    std::vector<std::complex<double>> vals(g.node_count());
    for (auto& v : vals)
        v = std::complex<double>(0.6 * (rng.uniform() - 0.5), 0.6 * (rng.uniform() - 0.5));
    const DiscreteOperator A = assemble(
        conductivity_from_beltrami(make_beltrami_field(g, std::move(vals))), g);
    // band pairs: (E,W), (N,S), (NE,SW), (NW,SE)
    const int pair[4][2] = {{1, 2}, {3, 4}, {5, 8}, {6, 7}};
    const int di[4] = {1, 0, 1, -1};
    const int dj[4] = {0, 1, 1, 1};
    for (int j = 1; j <= g.niy(); ++j) {
        for (int i = 1; i <= g.nix(); ++i) {
            for (int p = 0; p < 4; ++p) {
                const int ii = i + di[p], jj = j + dj[p];
                if (ii < 1 || ii > g.nix() || jj < 1 || jj > g.niy()) continue;
                CHECK(A.form_entry(i, j, pair[p][0]) == A.form_entry(ii, jj, pair[p][1]));
            }
        }
    }
}

TEST_CASE("solve: eigenfunction right-hand side and inverse consistency") {
    const Grid g{16, 16, 1.0, 1.0};
    const DiscreteOperator A = laplacian(g);

    CHECK(norm_l2(solve(A, GridFunction(g), 1e-12)) == 0.0);

    const GridFunction e1 = eigenfunction(g);
    const double lam = lambda1_5pt(g);
    const GridFunction u = solve(A, e1, 1e-12);
    GridFunction expect = e1;
    expect *= 1.0 / lam;
    GridFunction diff = u;
    diff -= expect;
    CHECK(norm_l2(diff) <= 1e-9 * norm_l2(expect));

    Rng rng(11);
    const GridFunction gg = random_field(g, rng);
    const GridFunction x = solve(A, gg, 1e-11);
    GridFunction back = A.apply(x);
    back -= gg;
    CHECK(norm_l2(back) <= 10.0 * 1e-11 * norm_l2(gg));
}

TEST_CASE("v_norm follows the spectral calculus on discrete eigenpairs") {
    const Grid g{12, 12, 1.0, 1.0};
    const DiscreteOperator A = laplacian(g);
    const GridFunction zero(g);
    for (int r = 0; r <= 3; ++r) CHECK(v_norm(A, zero, r) == 0.0);
    CHECK_THROWS_AS(v_norm(A, zero, 4), ConfigError);

    // sin modes are exact eigenvectors of the 5-point operator
    for (int kx : {1, 2}) {
        const GridFunction e = eigenfunction(g, kx, kx);
        const double sx = std::sin(kx * M_PI * g.hx() / 2.0);
        const double lam = 8.0 / (g.hx() * g.hx()) * sx * sx;
        const double base = v_norm(A, e, 0);
        for (int r = 1; r <= 3; ++r) {
            CHECK(v_norm(A, e, r) ==
                  doctest::Approx(std::pow(lam, 0.5 * r) * base).epsilon(1e-10));
        }
    }

    // Rayleigh lower bound for random fields
    Rng rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const GridFunction u = random_field(g, rng);
        CHECK(v_norm_sq(A, u, 1) >= lambda1_5pt(g) * v_norm_sq(A, u, 0) * (1.0 - 1e-12));
    }
}

TEST_CASE("V1 norm agrees with the assembled form value exactly") {
    const Grid g{10, 14, 1.0, 2.0};
    Rng rng(9);
    std::vector<std::complex<double>> vals(g.node_count());
    for (auto& v : vals)
        v = std::complex<double>(0.5 * (rng.uniform() - 0.5), 0.5 * (rng.uniform() - 0.5));
    const DiscreteOperator A =
        assemble(conductivity_from_beltrami(make_beltrami_field(g, std::move(vals))), g);
    const GridFunction u = random_field(g, rng);
    const double via_form = A.form_value(u);
    const double via_apply = dot_l2(A.apply(u), u);
    CHECK(via_apply == doctest::Approx(via_form).epsilon(1e-12));
    CHECK(v_norm_sq(A, u, 1) == via_form);
}

TEST_CASE("form bounds against the Laplacian Dirichlet form") {
    const Grid g{14, 14, 1.0, 1.0};
    Rng rng(21);
    const double k = 0.55;
    std::vector<std::complex<double>> vals(g.node_count());
    for (auto& v : vals) {
        const double r = k * rng.uniform(), th = 2 * M_PI * rng.uniform();
        v = std::complex<double>(r * std::cos(th), r * std::sin(th));
    }
    const BeltramiField mu = make_beltrami_field(g, std::move(vals));
    const DiscreteOperator A = assemble(conductivity_from_beltrami(mu), g);
    const DiscreteOperator D = laplacian(g);
    const double m = ellipticity_lower(mu.k_bound), M = ellipticity_upper(mu.k_bound);
    for (int trial = 0; trial < 10; ++trial) {
        const GridFunction u = random_field(g, rng);
        const double a = A.form_value(u), d = D.form_value(u);
        CHECK(a >= m * d * (1.0 - 1e-12));
        CHECK(a <= M * d * (1.0 + 1e-12));
        // Poincare at the discrete scale
        CHECK(v_norm_sq(A, u, 0) <= v_norm_sq(A, u, 1) / (m * lambda1_5pt(g)) + 1e-12);
    }
}

TEST_CASE("smallest eigenvalue: isotropic, stretched, and random coefficients") {
    const Grid g{24, 24, 1.0, 1.0};
    const DiscreteOperator D = laplacian(g);
    const double lam = smallest_eigenvalue(D, 1e-10);
    CHECK(lam == doctest::Approx(lambda1_5pt(g)).epsilon(1e-8));
    CHECK(lam == doctest::Approx(2.0 * M_PI * M_PI).epsilon(0.02));

    const double k = 0.5;
    const DiscreteOperator Ak =
        assemble(conductivity_from_beltrami(beltrami_constant(g, {k, 0.0})), g);
    const double expect =
        M_PI * M_PI * (ellipticity_lower(k) + ellipticity_upper(k));
    CHECK(smallest_eigenvalue(Ak, 1e-10) == doctest::Approx(expect).epsilon(0.02));

    Rng rng(33);
    std::vector<std::complex<double>> vals(g.node_count());
    for (auto& v : vals) {
        const double r = 0.6 * rng.uniform(), th = 2 * M_PI * rng.uniform();
        v = std::complex<double>(r * std::cos(th), r * std::sin(th));
    }
    const BeltramiField mu = make_beltrami_field(g, std::move(vals));
    const DiscreteOperator A = assemble(conductivity_from_beltrami(mu), g);
    CHECK(smallest_eigenvalue(A, 1e-10) >=
          ellipticity_lower(mu.k_bound) * lam - 1e-8);
}

TEST_CASE("solver guards: mismatched grids, bad data, indefinite operators") {
    const Grid g{6, 6, 1.0, 1.0};
    const Grid g2{8, 6, 1.0, 1.0};
    const DiscreteOperator A = laplacian(g);
    CHECK_THROWS_AS(solve(A, GridFunction(g2), 1e-10), ConfigError);
    CHECK_THROWS_AS(
        assemble(conductivity_from_beltrami(beltrami_constant(g2, {0.0, 0.0})), g),
        ConfigError);

    Rng rng(2);
    GridFunction b = random_field(g, rng);
    b.v[3] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(solve(A, b, 1e-10), NumericError);

    // CG reports failure on a non-SPD operator instead of looping.
    const GridFunction rhs = random_field(g, rng);
    GridFunction x(g);
    auto negate = [&](const GridFunction& in, GridFunction& out) {
        A.apply(in, out);
        out *= -1.0;
    };
    const CgResult cg = conjugate_gradient(negate, rhs, x, 1e-10);
    CHECK_FALSE(cg.converged);
}
