#include <doctest.h>

#include <cmath>

#include "memoryheat/conductivity.hpp"
#include "memoryheat/rng.hpp"

using namespace memoryheat;

namespace {

BeltramiField random_mu(const Grid& g, double k, Rng& rng) {
    std::vector<std::complex<double>> vals(g.node_count());
    for (auto& v : vals) {
        const double r = k * rng.uniform();
        const double th = 2.0 * M_PI * rng.uniform();
        v = std::complex<double>(r * std::cos(th), r * std::sin(th));
    }
    return make_beltrami_field(g, std::move(vals));
}

} // namespace

TEST_CASE("isotropic limit: mu = 0 gives the identity tensor") {
    const Grid g{8, 8, 1.0, 1.0};
    const ConductivityTensor s = conductivity_from_beltrami(beltrami_constant(g, {0.0, 0.0}));
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        CHECK(s.a11[k] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(s.a12[k] == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(s.a22[k] == doctest::Approx(1.0).epsilon(1e-15));
    }
    const EllipticityReport r = ellipticity_report(s);
    CHECK(r.min_eig == doctest::Approx(1.0));
    CHECK(r.max_eig == doctest::Approx(1.0));
    CHECK(r.max_det_error <= 1e-15);
}

TEST_CASE("real constant mu = k gives diag(m(k), M(k))") {
    const Grid g{6, 5, 2.0, 1.0};
    const double k = 0.5;
    const ConductivityTensor s = conductivity_from_beltrami(beltrami_constant(g, {k, 0.0}));
    for (std::size_t n = 0; n < g.node_count(); ++n) {
        CHECK(s.a11[n] == doctest::Approx(ellipticity_lower(k)).epsilon(1e-14));
        CHECK(s.a12[n] == doctest::Approx(0.0));
        CHECK(s.a22[n] == doctest::Approx(ellipticity_upper(k)).epsilon(1e-14));
    }
    const EllipticityReport r = ellipticity_report(s);
    CHECK(r.min_eig == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(r.max_eig == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(r.max_det_error <= 1e-12);
}

TEST_CASE("imaginary constant mu = i b has eigenvectors along the diagonals") {
    const Grid g{4, 4, 1.0, 1.0};
    const double b = 0.4;
    const ConductivityTensor s = conductivity_from_beltrami(beltrami_constant(g, {0.0, b}));
    const double m = ellipticity_lower(b), M = ellipticity_upper(b);
    // sigma (1,1)^T = m (1,1)^T and sigma (1,-1)^T = M (1,-1)^T
    const std::size_t n = g.node_index(2, 2);
    CHECK(s.a11[n] + s.a12[n] == doctest::Approx(m).epsilon(1e-14));
    CHECK(s.a12[n] + s.a22[n] == doctest::Approx(m).epsilon(1e-14));
    CHECK(s.a11[n] - s.a12[n] == doctest::Approx(M).epsilon(1e-14));
    CHECK(s.a22[n] - s.a12[n] == doctest::Approx(M).epsilon(1e-14));
}

TEST_CASE("random fields: unit determinant and eigenvalue window") {
    Rng rng(42);
    const Grid g{10, 10, 1.0, 1.0};
    for (double k : {0.3, 0.6, 0.9}) {
        const BeltramiField mu = random_mu(g, k, rng);
        CHECK(mu.k_bound <= k);
        const ConductivityTensor s = conductivity_from_beltrami(mu);
        const EllipticityReport r = ellipticity_report(s);
        CHECK(r.max_det_error <= 1e-12);
        CHECK(r.min_eig >= ellipticity_lower(k) - 1e-10);
        CHECK(r.max_eig <= ellipticity_upper(k) + 1e-10);

        // Independent oracle: quadratic form along 16 deterministic plus 100
        // random directions at a sample of nodes.
        const double m = ellipticity_lower(mu.k_bound), M = ellipticity_upper(mu.k_bound);
        for (std::size_t n = 0; n < g.node_count(); n += 7) {
            for (int d = 0; d < 116; ++d) {
                double th = d < 16 ? (2.0 * M_PI * d) / 16.0 : 2.0 * M_PI * rng.uniform();
                const double x = std::cos(th), y = std::sin(th);
                const double q = s.a11[n] * x * x + 2.0 * s.a12[n] * x * y + s.a22[n] * y * y;
                CHECK(q >= m - 1e-12);
                CHECK(q <= M + 1e-12);
            }
        }
    }
}

TEST_CASE("pointwise locality of the correspondence") {
    const Grid g{6, 6, 1.0, 1.0};
    Rng rng(7);
    const BeltramiField mu = random_mu(g, 0.5, rng);
    const ConductivityTensor s0 = conductivity_from_beltrami(mu);

    std::vector<std::complex<double>> vals = mu.values;
    const std::size_t target = g.node_index(3, 2);
    vals[target] = {0.21, -0.17};
    const ConductivityTensor s1 =
        conductivity_from_beltrami(make_beltrami_field(g, std::move(vals)));

    for (std::size_t n = 0; n < g.node_count(); ++n) {
        if (n == target) {
            CHECK(s1.a11[n] != s0.a11[n]);
        } else {
            CHECK(s1.a11[n] == s0.a11[n]);
            CHECK(s1.a12[n] == s0.a12[n]);
            CHECK(s1.a22[n] == s0.a22[n]);
        }
    }
}

TEST_CASE("degenerate coefficients are rejected with location") {
    const Grid g{4, 4, 1.0, 1.0};
    std::vector<std::complex<double>> vals(g.node_count(), {0.1, 0.0});
    vals[g.node_index(2, 3)] = {1.0 - 1e-9, 0.0};
    CHECK_THROWS_WITH_AS(make_beltrami_field(g, vals), doctest::Contains("(2,3)"),
                         ConfigError);
    vals[g.node_index(2, 3)] = {1.5, 0.0};
    CHECK_THROWS_AS(make_beltrami_field(g, vals), ConfigError);
}

TEST_CASE("built-in generators satisfy the bound invariants") {
    const Grid g{16, 16, 1.0, 1.0};
    const BeltramiField cb = beltrami_checkerboard(g, 0.5, 4);
    CHECK(cb.k_bound == doctest::Approx(0.5));
    const BeltramiField rad = beltrami_radial(g, 0.7);
    CHECK(rad.k_bound <= 0.7 + 1e-12);
    const EllipticityReport r =
        ellipticity_report(conductivity_from_beltrami(cb));
    CHECK(r.max_det_error <= 1e-12);
}
