#pragma once

#include <complex>
#include <string>
#include <vector>

#include "memoryheat/grid.hpp"

namespace memoryheat {

// m(k), M(k): extreme conductivity eigenvalues for |mu| <= k.
inline double ellipticity_lower(double k) { return (1.0 - k) / (1.0 + k); }
inline double ellipticity_upper(double k) { return (1.0 + k) / (1.0 - k); }

// Beltrami coefficient field, one complex value per grid node (boundary
// nodes included: mu is a material property, not subject to the Dirichlet
// condition). k_bound is the scanned sup of |mu| and must stay below 1.
struct BeltramiField {
    Grid grid;
    std::vector<std::complex<double>> values; // (nx+1)*(ny+1), row-major in j
    double k_bound = 0.0;

    std::complex<double> at(int i, int j) const { return values[grid.node_index(i, j)]; }
};

// Construction scans every node, computes k_bound and rejects |mu| >= 1-1e-8
// (conditioning of m(k) degenerates there).
BeltramiField make_beltrami_field(const Grid& grid, std::vector<std::complex<double>> values);

// Pointwise symmetric conductivity with unit determinant, stored nodewise.
struct ConductivityTensor {
    Grid grid;
    std::vector<double> a11, a12, a22; // per node
    double m_k = 1.0;                  // (1-k)/(1+k)
    double M_k = 1.0;                  // (1+k)/(1-k)
    double k_bound = 0.0;
};

struct EllipticityReport {
    double min_eig = 0.0;
    double max_eig = 0.0;
    double max_det_error = 0.0;
};

// sigma_mu = [ |1-mu|^2, -2 Im mu ; -2 Im mu, |1+mu|^2 ] / (1-|mu|^2), per node.
ConductivityTensor conductivity_from_beltrami(const BeltramiField& mu);

// Pointwise eigenvalue extremes (closed-form 2x2 eigensolve) and the worst
// |det sigma - 1| over all nodes. Pure report; callers assert.
EllipticityReport ellipticity_report(const ConductivityTensor& sigma);

// Built-in mu-field generators used by the scenario schema.
BeltramiField beltrami_constant(const Grid& grid, std::complex<double> mu);
// tiles x tiles checkerboard of +k / -k (real), axis-swapping anisotropy.
BeltramiField beltrami_checkerboard(const Grid& grid, double k, int tiles);
// |mu| ramping linearly in radius up to k, phase winding once around center.
BeltramiField beltrami_radial(const Grid& grid, double k);

} // namespace memoryheat
