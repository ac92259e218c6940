#include <doctest.h>

#include <cmath>

#include "memoryheat/kernel.hpp"

using namespace memoryheat;

namespace {

std::vector<double> geometric_nodes(double lo, double hi, int n) {
    std::vector<double> s(n);
    for (int i = 0; i < n; ++i)
        s[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    return s;
}

} // namespace

TEST_CASE("single mode (1,1): closed forms") {
    const MemoryKernel k = MemoryKernel::from_exponential_sum({{1.0, 1.0}});
    CHECK(k.kappa0() == doctest::Approx(1.0));
    CHECK(k.theta() == doctest::Approx(1.0));
    CHECK(k.kappa_of(0.0) == doctest::Approx(1.0));
    CHECK(k.kappa_of(std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(k.h_of(2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(k.kappa_of(-0.1), ConfigError);
}

TEST_CASE("single mode (1,2): kappa0 = 2, Theta = 1/2, normalized") {
    const MemoryKernel k = MemoryKernel::from_exponential_sum({{1.0, 2.0}});
    CHECK(k.kappa0() == doctest::Approx(2.0));
    CHECK(k.theta() == doctest::Approx(0.5));
    const KernelReport r = validate_kernel(k);
    CHECK(r.k1_ok);
    CHECK(r.k2_ok);
    CHECK(r.normalization_error <= 1e-12);
    CHECK(r.exp_decay_ok);
}

TEST_CASE("two modes (0.5,1),(0.5,4): kappa0 = 2.5, Theta = 1") {
    const MemoryKernel k = MemoryKernel::from_exponential_sum({{0.5, 1.0}, {0.5, 4.0}});
    CHECK(k.kappa0() == doctest::Approx(2.5));
    CHECK(k.theta() == doctest::Approx(1.0));
    const KernelReport r = validate_kernel(k);
    CHECK(r.k1_ok);
    CHECK(r.k2_ok);
    CHECK(r.theta_min <= 1.0 + 1e-12);
    // Dense-grid oracle: kappa/h climbs to 1/min(a) as the slow mode takes
    // over; at the far checked points the gap is astronomically small.
    CHECK(r.theta_min == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("theta_min is exactly 1/a for a single mode") {
    for (double a : {0.5, 1.0, 3.0}) {
        const MemoryKernel k = MemoryKernel::from_exponential_sum({{1.0, a}});
        const KernelReport r = validate_kernel(k);
        CHECK(r.theta_min == doctest::Approx(1.0 / a).epsilon(1e-12));
    }
}

TEST_CASE("weight validation and the rescale escape hatch") {
    CHECK_THROWS_AS(MemoryKernel::from_exponential_sum({{0.5, 1.0}}), ConfigError);
    CHECK_THROWS_AS(MemoryKernel::from_exponential_sum({{1.0, -1.0}}), ConfigError);
    CHECK_THROWS_AS(MemoryKernel::from_exponential_sum({{-1.0, 1.0}}), ConfigError);
    const MemoryKernel k = MemoryKernel::from_exponential_sum({{0.5, 1.0}, {1.5, 2.0}}, true);
    const KernelReport r = validate_kernel(k);
    CHECK(r.normalization_error <= 1e-12);
}

TEST_CASE("sampled copy matches the closed form within quadrature accuracy") {
    const MemoryKernel exact = MemoryKernel::from_exponential_sum({{1.0, 1.0}});
    const auto s = geometric_nodes(1e-4, 40.0, 400);
    std::vector<double> h(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) h[i] = std::exp(-s[i]);
    const MemoryKernel sampled = MemoryKernel::from_samples(s, h);
    CHECK(sampled.kappa0() == doctest::Approx(1.0).epsilon(1e-5));
    for (double probe : {0.1, 0.5, 1.0, 3.0, 10.0}) {
        CHECK(sampled.h_of(probe) == doctest::Approx(exact.h_of(probe)).epsilon(1e-6));
        CHECK(sampled.kappa_of(probe) ==
              doctest::Approx(exact.kappa_of(probe)).epsilon(1e-5));
    }
    const KernelReport r = validate_kernel(sampled);
    CHECK(r.k1_ok);
    CHECK(r.k2_ok);
    CHECK(r.certified_at_nodes_only);
    CHECK(r.normalization_error <= 1e-6);
}

TEST_CASE("tampered kernel: h inflated beyond s = 5 fails (K1)") {
    const auto s = geometric_nodes(1e-3, 40.0, 300);
    std::vector<double> h(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        h[i] = std::exp(-s[i]) * (s[i] > 5.0 ? std::exp(s[i] / 10.0) : 1.0);
    const MemoryKernel k = MemoryKernel::from_samples(s, h, true);
    const KernelReport r = validate_kernel(k);
    CHECK_FALSE(r.k1_ok);
}

TEST_CASE("kappa' = -h: centered finite differences at second order") {
    const MemoryKernel k = MemoryKernel::from_exponential_sum({{0.3, 1.0}, {0.7, 2.5}});
    const double s = 0.8;
    double prev_err = 0.0;
    for (int lvl = 0; lvl < 3; ++lvl) {
        const double d = 1e-2 / (1 << lvl);
        const double fd = (k.kappa_of(s + d) - k.kappa_of(s - d)) / (2.0 * d);
        const double err = std::abs(fd + k.h_of(s));
        if (lvl > 0) {
            const double ratio = prev_err / err;
            CHECK(ratio > 3.4);
            CHECK(ratio < 4.6);
        }
        prev_err = err;
    }
}

TEST_CASE("truncation horizon keeps the kappa tail below 1e-10") {
    for (auto modes : {std::vector<MemoryKernel::Mode>{{1.0, 1.0}},
                       std::vector<MemoryKernel::Mode>{{0.5, 1.0}, {0.5, 4.0}},
                       std::vector<MemoryKernel::Mode>{{1.0, 0.25}}}) {
        const MemoryKernel k = MemoryKernel::from_exponential_sum(modes);
        // int_{s_max}^inf kappa = sum_j b_j exp(-a_j s_max)
        double tail = 0.0;
        for (const auto& m : k.modes()) tail += m.b * std::exp(-m.a * k.s_max());
        CHECK(tail <= k.kappa0() * k.theta() * std::exp(-k.s_max() / k.theta()) + 1e-300);
        CHECK(tail <= 1e-10);
    }
}

TEST_CASE("integral_h closed form matches quadrature") {
    const MemoryKernel k = MemoryKernel::from_exponential_sum({{0.5, 1.0}, {0.5, 4.0}});
    const double lo = 0.2, hi = 1.7;
    // trapezoid oracle
    const int n = 20000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double a = lo + (hi - lo) * i / n;
        const double b = lo + (hi - lo) * (i + 1) / n;
        acc += 0.5 * (k.h_of(a) + k.h_of(b)) * (b - a);
    }
    CHECK(k.integral_h(lo, hi) == doctest::Approx(acc).epsilon(1e-8));
}
