#include "memoryheat/nonlinearity.hpp"

#include <algorithm>
#include <cmath>

namespace memoryheat {

namespace {

// Symmetric log-spaced scan grid: 0, +-10^p for p in [-6, 6].
std::vector<double> scan_points() {
    std::vector<double> pts;
    pts.push_back(0.0);
    const int n = 600;
    for (int i = 0; i <= n; ++i) {
        const double r = std::pow(10.0, -6.0 + 12.0 * i / n);
        pts.push_back(r);
        pts.push_back(-r);
    }
    return pts;
}

} // namespace

void certify(Nonlinearity& phi) {
    if (std::abs(phi.eval(0.0)) > 1e-14)
        throw ConfigError("phi", "phi(0) must be 0");
    const auto pts = scan_points();
    double inf_d1 = std::numeric_limits<double>::infinity();
    double c_fit = 0.0;
    for (double r : pts) {
        const double d1 = phi.d1(r);
        if (!std::isfinite(d1)) throw ConfigError("phi", "phi' not finite on scan");
        inf_d1 = std::min(inf_d1, d1);
        const double derivs[3] = {d1, phi.d2(r), phi.d3(r)};
        for (int j = 0; j < 3; ++j) {
            const double denom = 1.0 + std::pow(std::abs(r), std::max(0, phi.growth_m - j));
            c_fit = std::max(c_fit, std::abs(derivs[j]) / denom);
        }
    }
    if (!std::isfinite(inf_d1))
        throw ConfigError("phi", "no lower bound for phi' found on scan");
    phi.diss_margin = std::max(0.0, -inf_d1);
    phi.growth_c = c_fit;
}

Nonlinearity cubic(double beta) {
    if (beta < 0.0) throw ConfigError("phi.cubic.beta", "beta must be >= 0");
    Nonlinearity p;
    p.eval = [beta](double u) { return u * u * u - beta * u; };
    p.d1 = [beta](double u) { return 3.0 * u * u - beta; };
    p.d2 = [](double u) { return 6.0 * u; };
    p.d3 = [](double) { return 6.0; };
    p.growth_m = 2;
    p.name = "cubic";
    certify(p);
    return p;
}

Nonlinearity zero_nonlinearity() {
    Nonlinearity p;
    p.eval = [](double) { return 0.0; };
    p.d1 = [](double) { return 0.0; };
    p.d2 = [](double) { return 0.0; };
    p.d3 = [](double) { return 0.0; };
    p.growth_m = 1;
    p.name = "zero";
    certify(p);
    return p;
}

Nonlinearity polynomial(const std::vector<double>& coeffs) {
    if (coeffs.empty()) return zero_nonlinearity();
    auto horner = [coeffs](double u, int deriv) {
        // phi(u) = sum_{i>=1} c_{i-1} u^i; differentiate term-wise.
        double acc = 0.0;
        for (std::size_t i = coeffs.size(); i-- > 0;) {
            const int power = static_cast<int>(i) + 1;
            double factor = 1.0;
            int p = power;
            for (int d = 0; d < deriv; ++d) factor *= p--;
            if (p < 0) continue;
            acc += coeffs[i] * factor * std::pow(u, p);
        }
        return acc;
    };
    Nonlinearity p;
    p.eval = [horner](double u) { return horner(u, 0); };
    p.d1 = [horner](double u) { return horner(u, 1); };
    p.d2 = [horner](double u) { return horner(u, 2); };
    p.d3 = [horner](double u) { return horner(u, 3); };
    p.growth_m = std::max(1, static_cast<int>(coeffs.size()) - 1);
    p.name = "poly";
    certify(p);
    return p;
}

MonotoneShift monotone_shift(const Nonlinearity& phi) {
    MonotoneShift out;
    out.ell = std::max(0.0, phi.diss_margin) + 1e-6;
    const double ell = out.ell;
    const Nonlinearity base = phi;
    out.phi0.eval = [base, ell](double u) { return base.eval(u) + ell * u; };
    out.phi0.d1 = [base, ell](double u) { return base.d1(u) + ell; };
    out.phi0.d2 = base.d2;
    out.phi0.d3 = base.d3;
    out.phi0.growth_m = base.growth_m;
    out.phi0.name = base.name + "+shift";
    certify(out.phi0);
    if (out.phi0.diss_margin > 0.0)
        throw ConfigError("phi", "monotone shift failed to certify phi0' >= 0");
    return out;
}

GridFunction apply_chain_rule(const DiscreteOperator& A, const ConductivityTensor& sigma,
                              const GridFunction& u, const Nonlinearity& phi) {
    const Grid& g = u.grid;
    if (A.grid() != g || sigma.grid != g)
        throw ConfigError("phi", "grid mismatch in apply_chain_rule");
    const GridFunction Au = A.apply(u);
    GridFunction out(g);
    const double ihx2 = 0.5 / g.hx(), ihy2 = 0.5 / g.hy();
    for (int j = 1; j <= g.niy(); ++j) {
        for (int i = 1; i <= g.nix(); ++i) {
            const std::size_t k = g.interior_index(i, j);
            const double ux = (u.at_node(i + 1, j) - u.at_node(i - 1, j)) * ihx2;
            const double uy = (u.at_node(i, j + 1) - u.at_node(i, j - 1)) * ihy2;
            const std::size_t n = g.node_index(i, j);
            const double quad = sigma.a11[n] * ux * ux + 2.0 * sigma.a12[n] * ux * uy +
                                sigma.a22[n] * uy * uy;
            const double uv = u.v[k];
            out.v[k] = phi.d1(uv) * Au.v[k] - phi.d2(uv) * quad;
        }
    }
    return out;
}

} // namespace memoryheat
