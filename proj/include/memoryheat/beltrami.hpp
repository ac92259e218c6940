#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "memoryheat/errors.hpp"

namespace memoryheat {

// Periodic model domain for the Beurling/Beltrami machinery: an n x n grid
// on the torus of side L. (The compressed operator S_Omega on bounded
// domains is out of scope; every verifiable algebraic property lives here.)
struct Torus {
    int n = 0;
    double L = 1.0;

    std::size_t count() const { return static_cast<std::size_t>(n) * n; }
    double h() const { return L / n; }
    double x(int i) const { return i * h(); }
    double y(int j) const { return j * h(); }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * n + i; }
    bool operator==(const Torus& o) const { return n == o.n && L == o.L; }
    bool operator!=(const Torus& o) const { return !(*this == o); }
};

struct SpectralField {
    Torus torus;
    std::vector<std::complex<double>> v;

    SpectralField() = default;
    explicit SpectralField(const Torus& t) : torus(t), v(t.count(), {0.0, 0.0}) {}

    std::complex<double> mean() const;
};

double norm_l2(const SpectralField& f);
double norm_lq(const SpectralField& f, double q);
SpectralField operator-(const SpectralField& a, const SpectralField& b);

// Forward/backward FFT (backward normalized by 1/n^2).
void fft_forward(const SpectralField& in, std::vector<std::complex<double>>& coeff);
void fft_backward(const std::vector<std::complex<double>>& coeff, SpectralField& out);

// Beurling transform: Fourier multiplier conj(xi)/xi, xi = k1 + i k2, with
// the zero mode mapped to 0. Normalized so S(dbar phi) = d phi. The public
// entry point rejects non-zero-mean input; multiplier_raw applies the
// multiplier to anything (the Neumann iterates drift in mean).
SpectralField beurling(const SpectralField& f);
SpectralField beurling_raw(const SpectralField& f);

// Wirtinger derivatives d = (dx - i dy)/2, dbar = (dx + i dy)/2 as
// multipliers; d_inverse integrates with the zero-mean gauge.
SpectralField d_complex(const SpectralField& f);
SpectralField dbar_complex(const SpectralField& f);
SpectralField d_inverse(const SpectralField& g);

inline double q_star(double k) { return 1.0 + 1.0 / k; }

struct ResolventConfig {
    double k = 0.5; // contraction bound, sup |mu|
    int max_iter = 400;
    double tol = 1e-12;
    std::vector<double> q_exponents;

    void validate() const {
        if (!(k >= 0.0) || k >= 1.0) throw ConfigError("resolvent.k", "need 0 <= k < 1");
        for (double q : q_exponents)
            if (!(q > 2.0)) throw ConfigError("resolvent.q_exponents", "need q > 2");
    }
};

// Neumann iteration g_{n+1} = Phi + mu S g_n for (I - mu S) g = Phi.
struct ResolventResult {
    SpectralField g;
    int iterations = 0;
    std::vector<double> residual_history; // ||g_{n+1} - g_n||_{L2}
    double final_residual = 0.0;          // ||(I - mu S) g - Phi||_{L2}
    double contraction_ratio = 0.0;       // late-iteration update ratio
    bool converged = false;
    // (q, ||g||_{L^q}) for each configured exponent
    std::vector<std::pair<double, double>> lq_norms;
};

ResolventResult neumann_resolvent(const SpectralField& mu, const SpectralField& phi,
                                  const ResolventConfig& cfg);

// Inhomogeneous Beltrami equation dbar f = mu d f + src on the torus via the
// fixed point g = S(mu g + src), g = d f, zero-mean gauge for f. The
// reported defect is |mean(mu g + src)|: the harmonic-form obstruction of
// the torus model (zero for constant mu with zero-mean data).
struct BeltramiSolveResult {
    SpectralField f;
    SpectralField g;
    int iterations = 0;
    double residual = 0.0; // ||dbar f - mu d f - src||_{L2}
    double defect = 0.0;
    bool converged = false;
};

BeltramiSolveResult solve_beltrami(const SpectralField& mu, const SpectralField& src,
                                   const ResolventConfig& cfg);

// -div(sigma_mu grad u) = div F solved twice on the torus: (a) periodic Q1
// assembly + zero-mean CG from the conductivity correspondence, (b) the
// complex-potential route through the Beltrami solve. Reports the relative
// L2 discrepancy of the demeaned solutions.
struct CrossValidationReport {
    double discrepancy_rel = 0.0;
    double defect = 0.0; // torus compatibility defect of route (b)
    int cg_iterations = 0;
    int beltrami_iterations = 0;
};

CrossValidationReport cross_validate_divform(const SpectralField& mu, const SpectralField& F1,
                                             const SpectralField& F2,
                                             const ResolventConfig& cfg);

// Periodic divergence-form solve (route (a)) exposed for tests: returns the
// zero-mean nodal solution of -div(sigma_mu grad u) = rhs.
std::vector<double> periodic_divform_solve(const SpectralField& mu,
                                           const std::vector<double>& rhs, double tol,
                                           int* iterations = nullptr);

} // namespace memoryheat
