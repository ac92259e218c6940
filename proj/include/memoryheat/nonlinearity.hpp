#pragma once

#include <functional>
#include <string>
#include <vector>

#include "memoryheat/conductivity.hpp"
#include "memoryheat/elliptic.hpp"
#include "memoryheat/grid.hpp"

namespace memoryheat {

// Reaction term phi with derivatives and the numerically certified
// dissipativity/growth data. phi(0) = 0 is asserted at construction; the
// growth exponent and the lower bound of phi' come from a log-spaced scan of
// [-1e6, 1e6] and are reported, never silently assumed.
struct Nonlinearity {
    std::function<double(double)> eval, d1, d2, d3;
    int growth_m = 1;        // (P2) exponent
    double diss_margin = 0.0; // phi'(r) >= -diss_margin over the scan
    double growth_c = 0.0;    // fitted C in |phi^{(1+j)}| <= C (1+|r|^{m-j})
    std::string name = "custom";

    GridFunction apply(const GridFunction& u) const {
        GridFunction out = u;
        for (double& x : out.v) x = eval(x);
        return out;
    }
};

// phi(u) = u^3 - beta*u (canonical (P1)(P2) instance, m = 2).
Nonlinearity cubic(double beta);
// phi identically zero.
Nonlinearity zero_nonlinearity();
// phi(u) = sum_i c[i] u^{i+1} (constant term forced to zero by the schema).
Nonlinearity polynomial(const std::vector<double>& coeffs);

// Scan-based certification of the construction invariants; called by the
// factories above and by the scenario gate.
void certify(Nonlinearity& phi);

// Shifted nonlinearity phi0(r) = phi(r) + ell*r with phi0' >= 0 on the scan
// range; ell = max(0, -inf phi') + 1e-6.
struct MonotoneShift {
    Nonlinearity phi0;
    double ell = 0.0;
};
MonotoneShift monotone_shift(const Nonlinearity& phi);

// Right-hand side of the operator chain rule
//   A_mu(phi(u)) = phi'(u) A_mu u - phi''(u) (sigma_mu grad u) . grad u
// with centered differences for grad u on interior nodes. Consistent with
// apply(A, phi(u)) to O(h^2) for smooth u and sigma.
GridFunction apply_chain_rule(const DiscreteOperator& A, const ConductivityTensor& sigma,
                              const GridFunction& u, const Nonlinearity& phi);

} // namespace memoryheat
