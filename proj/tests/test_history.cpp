#include <doctest.h>

#include <cmath>
#include <memory>

#include "memoryheat/history.hpp"
#include "memoryheat/rng.hpp"

using namespace memoryheat;

namespace {

struct Setup {
    Grid grid{8, 8, 1.0, 1.0};
    std::shared_ptr<const MemoryKernel> kernel;
    std::shared_ptr<const SQuadrature> quad;
    DiscreteOperator A;
    double dt;

    explicit Setup(std::vector<MemoryKernel::Mode> modes = {{1.0, 1.0}}, double dt_ = 1e-2,
                   int npd = 0)
        : dt(dt_) {
        kernel = std::make_shared<MemoryKernel>(MemoryKernel::from_exponential_sum(modes));
        const int use_npd = npd > 0 ? npd : nodes_per_decade_for(dt_);
        quad = std::make_shared<SQuadrature>(
            kernel, SGrid::geometric(kernel->s_max(), std::min(dt_, kernel->s_max() / 16.0),
                                     use_npd));
        A = assemble(conductivity_from_beltrami(beltrami_constant(grid, {0.0, 0.0})), grid);
    }

    RingBufferHistory ring(const PastHistory& past) const {
        RingBufferHistory rb(grid, quad, dt);
        rb.set_initial_history(past);
        return rb;
    }
    ModeBankHistory modes_of(const PastHistory& past) const {
        ModeBankHistory mb(grid, kernel);
        mb.set_initial_history(past, quad.get());
        return mb;
    }
    GridFunction unit_field(double v = 1.0) const { return GridFunction(grid, v); }
};

} // namespace

TEST_CASE("initial histories: closed forms at the s-nodes") {
    const Setup s;
    const GridFunction g = s.unit_field(0.7);

    SUBCASE("zero past") {
        RingBufferHistory rb = s.ring(PastHistory::zero());
        CHECK(norm_l2(rb.eval(0.5)) == 0.0);
        CHECK(rb.m_norm_sq(s.A, 1) == 0.0);
        ModeBankHistory mb = s.modes_of(PastHistory::zero());
        CHECK(norm_l2(mb.weighted_sum()) == 0.0);
    }
    SUBCASE("constant past: eta0(s) = s u, zeta = u/a") {
        RingBufferHistory rb = s.ring(PastHistory::constant(g));
        for (double probe : {0.05, 0.3, 2.0}) {
            GridFunction diff = rb.eval(probe);
            axpy(-probe, g, diff);
            CHECK(norm_l2(diff) <= 1e-12);
        }
        ModeBankHistory mb = s.modes_of(PastHistory::constant(g));
        GridFunction diff = mb.zeta()[0];
        axpy(-1.0, g, diff); // a = 1
        CHECK(norm_l2(diff) <= 1e-12);
    }
    SUBCASE("exponential past: eta0(s) = (1-e^{-s}) g, zeta = g/(a+rate)") {
        RingBufferHistory rb = s.ring(PastHistory::exponential(1.0, g));
        for (double probe : {0.1, 1.0, 4.0}) {
            GridFunction diff = rb.eval(probe);
            axpy(-(1.0 - std::exp(-probe)), g, diff);
            CHECK(norm_l2(diff) <= 1e-12);
        }
        ModeBankHistory mb = s.modes_of(PastHistory::exponential(1.0, g));
        GridFunction diff = mb.zeta()[0];
        axpy(-0.5, g, diff);
        CHECK(norm_l2(diff) <= 1e-12);
    }
    SUBCASE("custom past quadrature matches the exponential closed form") {
        const Grid grid = s.grid;
        PastHistory p;
        p.kind = PastHistory::Kind::Custom;
        p.custom = [&](double y) {
            GridFunction f = GridFunction(grid, 0.7);
            f *= std::exp(-y);
            return f;
        };
        RingBufferHistory rb(s.grid, s.quad, s.dt);
        rb.set_initial_history(p);
        GridFunction diff = rb.eval(1.0);
        axpy(-(1.0 - std::exp(-1.0)), g, diff);
        CHECK(norm_l2(diff) <= 1e-5);
    }
}

TEST_CASE("translation semigroup: identity, contraction, exact decay factor") {
    const Setup s;
    Rng rng(17);

    SUBCASE("t = 0 is the identity") {
        RingBufferHistory rb = s.ring(PastHistory::exponential(2.0, s.unit_field()));
        const double before = rb.m_norm_sq(s.A, 1);
        CHECK(rb.translate(0.0).m_norm_sq(s.A, 1) == doctest::Approx(before));
    }
    SUBCASE("contraction for random histories") {
        for (int trial = 0; trial < 100; ++trial) {
            const double rate = 0.3 + 3.0 * rng.uniform();
            RingBufferHistory rb =
                s.ring(PastHistory::exponential(rate, random_field(s.grid, rng)));
            const double t = 2.0 * rng.uniform();
            CHECK(rb.translate(t).m_norm_sq(s.A, 1) <=
                  rb.m_norm_sq(s.A, 1) * (1.0 + 1e-12));
        }
    }
    SUBCASE("single-mode kernel: exact factor exp(-a t)") {
        const Setup s2({{1.0, 2.0}});
        RingBufferHistory rb = s2.ring(PastHistory::exponential(1.0, s2.unit_field()));
        const double base = rb.m_norm_sq(s2.A, 1);
        for (double t : {0.1, 0.7, 3.0}) {
            CHECK(rb.translate(t).m_norm_sq(s2.A, 1) ==
                  doctest::Approx(std::exp(-2.0 * t) * base).epsilon(1e-12));
        }
    }
    SUBCASE("semigroup law via shift accumulation") {
        RingBufferHistory rb = s.ring(PastHistory::constant(s.unit_field()));
        const RingBufferHistory two_steps = rb.translate(0.3).translate(0.45);
        const RingBufferHistory one_step = rb.translate(0.75);
        CHECK(two_steps.m_norm_sq(s.A, 1) == doctest::Approx(one_step.m_norm_sq(s.A, 1)));
        GridFunction diff = two_steps.eval(1.3);
        diff -= one_step.eval(1.3);
        CHECK(norm_l2(diff) == 0.0);
    }
    SUBCASE("translate requires a source-free history and t >= 0") {
        RingBufferHistory rb = s.ring(PastHistory::zero());
        CHECK_THROWS_AS(rb.translate(-0.1), ConfigError);
        rb.evolve(s.unit_field(), s.dt);
        CHECK_THROWS_AS(rb.translate(0.1), ConfigError);
    }
}

TEST_CASE("evolution closed forms") {
    const Setup s;
    const GridFunction c = s.unit_field(0.9);

    SUBCASE("zero stays zero") {
        RingBufferHistory rb = s.ring(PastHistory::zero());
        ModeBankHistory mb = s.modes_of(PastHistory::zero());
        for (int n = 0; n < 20; ++n) {
            rb.evolve(GridFunction(s.grid), s.dt);
            mb.evolve(GridFunction(s.grid), s.dt);
        }
        CHECK(rb.m_norm_sq(s.A, 1) == 0.0);
        CHECK(norm_l2(mb.weighted_sum()) == 0.0);
    }
    SUBCASE("constant u: zeta closed form and the two-branch formula") {
        RingBufferHistory rb = s.ring(PastHistory::zero());
        ModeBankHistory mb = s.modes_of(PastHistory::zero());
        const int nsteps = 50;
        for (int n = 0; n < nsteps; ++n) {
            rb.evolve(c, s.dt);
            mb.evolve(c, s.dt);
        }
        const double t = nsteps * s.dt;
        // zeta(t) = c (1 - e^{-a t})/a with a = 1
        GridFunction zdiff = mb.zeta()[0];
        axpy(-(1.0 - std::exp(-t)), c, zdiff);
        CHECK(norm_l2(zdiff) <= 1e-13);
        // eta^t(s) = c min(s, t)
        for (double probe : {0.01 * t, 0.4 * t, t, 2.0 * t}) {
            GridFunction ediff = rb.eval(probe);
            axpy(-std::min(probe, t), c, ediff);
            CHECK(norm_l2(ediff) <= 1e-12);
        }
        CHECK(norm_l2(rb.eval(0.0)) == 0.0); // trace condition
    }
    SUBCASE("ring buffer rejects mismatched dt") {
        RingBufferHistory rb = s.ring(PastHistory::zero());
        CHECK_THROWS_AS(rb.evolve(c, 2.0 * s.dt), ConfigError);
    }
}

TEST_CASE("memory term: steady history yields exactly A u_f") {
    const Setup s;
    const GridFunction uf = s.unit_field(1.3);
    const GridFunction Auf = s.A.apply(uf);

    ModeBankHistory mb = s.modes_of(PastHistory::constant(uf));
    GridFunction m1 = mb.memory_term(s.A);
    m1 -= Auf;
    CHECK(norm_l2(m1) <= 1e-13 * norm_l2(Auf));

    // Ring-buffer quadrature: the hat interpolant of s*u_f is exact, so only
    // the kappa tail beyond s_max is lost.
    RingBufferHistory rb = s.ring(PastHistory::constant(uf));
    GridFunction m2 = rb.memory_term(s.A);
    m2 -= Auf;
    CHECK(norm_l2(m2) <= 1e-10 * norm_l2(Auf));
}

TEST_CASE("representation equivalence along a driven run") {
    const Setup s({{1.0, 1.0}}, 1e-3);
    Rng rng(23);
    RingBufferHistory rb = s.ring(PastHistory::zero());
    ModeBankHistory mb = s.modes_of(PastHistory::zero());

    // Smooth-in-time driving signal.
    const GridFunction base = random_field(s.grid, rng);
    const GridFunction bump = random_field(s.grid, rng);
    double worst = 0.0;
    for (int n = 1; n <= 300; ++n) {
        const double t = n * s.dt;
        GridFunction u = base;
        u *= std::cos(2.0 * t);
        axpy(std::sin(3.0 * t), bump, u);
        rb.evolve(u, s.dt);
        mb.evolve(u, s.dt);
        if (n % 50 == 0) {
            GridFunction d = rb.memory_term(s.A);
            const GridFunction ref = mb.memory_term(s.A);
            d -= ref;
            worst = std::max(worst, norm_l2(d) / norm_l2(ref));
        }
    }
    CHECK(worst <= 1e-4);

    // The mode bank is the projection of the ring buffer: zeta_j equals
    // int a e^{-a s} eta(s) ds within quadrature error.
    const auto w = s.quad->weights_mode(1.0);
    const auto samples = rb.eval_all();
    GridFunction proj(s.grid);
    for (std::size_t i = 0; i < samples.size(); ++i) axpy(w[i], samples[i], proj);
    proj -= mb.zeta()[0];
    CHECK(norm_l2(proj) <= 1e-4 * norm_l2(mb.zeta()[0]));
}

TEST_CASE("memory norms: closed-form weights and the tail bound") {
    const Setup s;
    const GridFunction g = s.unit_field(1.1);

    SUBCASE("integral e^{-s}(1-e^{-s})^2 = 1/3") {
        RingBufferHistory rb = s.ring(PastHistory::exponential(1.0, g));
        const MemoryNormReport rep = m_norm(rb, s.A, 1);
        const double expect = v_norm_sq(s.A, g, 1) / 3.0;
        CHECK(rep.m_norm_sq == doctest::Approx(expect).epsilon(1e-5));
        CHECK(rep.tail_u >= 0.0);
        CHECK(rep.tail_u <= 0.5 * s.kernel->theta() * rep.m_norm_sq + 1e-12);
        CHECK_THROWS_AS(m_norm(rb, s.A, 3), ConfigError);
    }
    SUBCASE("tail bound for random histories") {
        Rng rng(5);
        for (int trial = 0; trial < 20; ++trial) {
            RingBufferHistory rb =
                s.ring(PastHistory::exponential(0.5 + rng.uniform(), random_field(s.grid, rng)));
            const MemoryNormReport rep = m_norm(rb, s.A, 1);
            CHECK(rep.tail_u >= 0.0);
            CHECK(rep.tail_u <= 0.5 * s.kernel->theta() * rep.m_norm_sq + 1e-12);
        }
    }
}

TEST_CASE("tail identity residual") {
    const Setup s({{1.0, 1.0}}, 1e-2);

    SUBCASE("zero trajectory gives exactly zero") {
        std::vector<TailSample> samples(5);
        CHECK(tail_identity_residual(samples, s.dt) == 0.0);
        samples.resize(2);
        CHECK_THROWS_AS(tail_identity_residual(samples, s.dt), ConfigError);
    }
    SUBCASE("stationary trajectory: residual at quadrature level") {
        const GridFunction uf = s.unit_field(0.8);
        RingBufferHistory rb = s.ring(PastHistory::constant(uf));
        std::vector<TailSample> samples;
        for (int n = 0; n < 4; ++n) samples.push_back(tail_sample(rb, s.A, uf, 1));
        // Both sides are constant; the identity reduces to
        // 1/2 int h s^2 = int kappa s (= 1 each for the unit-rate kernel).
        CHECK(tail_identity_residual(samples, s.dt) <= 1e-6 * v_norm_sq(s.A, uf, 1));
    }
    SUBCASE("pure decay: residual is O(dt) and halves") {
        Rng rng(31);
        const GridFunction g0 = random_field(s.grid, rng);
        double prev = 0.0;
        for (int lvl = 0; lvl < 2; ++lvl) {
            const double dt = 5e-2 / (1 << lvl);
            const Setup sl({{1.0, 1.0}}, dt, 96);
            RingBufferHistory rb = sl.ring(PastHistory::exponential(1.0, g0));
            const GridFunction zero(sl.grid);
            std::vector<TailSample> samples;
            samples.push_back(tail_sample(rb, sl.A, zero, 1));
            for (int n = 0; n < 6; ++n) {
                rb.evolve(zero, dt);
                samples.push_back(tail_sample(rb, sl.A, zero, 1));
            }
            const double res = tail_identity_residual(samples, dt);
            if (lvl > 0) {
                const double ratio = prev / res;
                CHECK(ratio > 1.4);
                CHECK(ratio < 3.0);
            }
            prev = res;
        }
    }
}
