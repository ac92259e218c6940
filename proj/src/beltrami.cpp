#include "memoryheat/beltrami.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

namespace memoryheat {

namespace {

std::mutex g_fftw_mutex; // FFTW planning is not thread-safe

void fft_2d(const std::complex<double>* in, std::complex<double>* out, int n, int sign) {
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(g_fftw_mutex);
        plan = fftw_plan_dft_2d(
            n, n,
            reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
            reinterpret_cast<fftw_complex*>(out), sign, FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(g_fftw_mutex);
        fftw_destroy_plan(plan);
    }
}

int signed_freq(int p, int n) { return (p <= n / 2) ? p : p - n; }

// Apply a Fourier multiplier m(k1,k2); the zero mode is passed through mul0.
template <typename M>
SpectralField apply_multiplier(const SpectralField& f, M&& mul) {
    const int n = f.torus.n;
    std::vector<std::complex<double>> coeff(f.v.size());
    fft_2d(f.v.data(), coeff.data(), n, FFTW_FORWARD);
    const double base = 2.0 * M_PI / f.torus.L;
    for (int pj = 0; pj < n; ++pj) {
        for (int pi = 0; pi < n; ++pi) {
            const double k1 = base * signed_freq(pi, n);
            const double k2 = base * signed_freq(pj, n);
            coeff[f.torus.index(pi, pj)] *= mul(k1, k2);
        }
    }
    SpectralField out(f.torus);
    fft_2d(coeff.data(), out.v.data(), n, FFTW_BACKWARD);
    const double scale = 1.0 / (static_cast<double>(n) * n);
    for (auto& z : out.v) z *= scale;
    return out;
}

} // namespace

std::complex<double> SpectralField::mean() const {
    std::complex<double> s{0.0, 0.0};
    for (const auto& z : v) s += z;
    return s / static_cast<double>(v.size());
}

double norm_l2(const SpectralField& f) {
    double s = 0.0;
    for (const auto& z : f.v) s += std::norm(z);
    return std::sqrt(s * f.torus.h() * f.torus.h());
}

double norm_lq(const SpectralField& f, double q) {
    double s = 0.0;
    for (const auto& z : f.v) s += std::pow(std::abs(z), q);
    return std::pow(s * f.torus.h() * f.torus.h(), 1.0 / q);
}

SpectralField operator-(const SpectralField& a, const SpectralField& b) {
    SpectralField out = a;
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] -= b.v[i];
    return out;
}

void fft_forward(const SpectralField& in, std::vector<std::complex<double>>& coeff) {
    coeff.resize(in.v.size());
    fft_2d(in.v.data(), coeff.data(), in.torus.n, FFTW_FORWARD);
}

void fft_backward(const std::vector<std::complex<double>>& coeff, SpectralField& out) {
    fft_2d(coeff.data(), out.v.data(), out.torus.n, FFTW_BACKWARD);
    const double scale = 1.0 / (static_cast<double>(out.torus.n) * out.torus.n);
    for (auto& z : out.v) z *= scale;
}

SpectralField beurling_raw(const SpectralField& f) {
    return apply_multiplier(f, [](double k1, double k2) -> std::complex<double> {
        if (k1 == 0.0 && k2 == 0.0) return {0.0, 0.0};
        const std::complex<double> xi(k1, k2);
        return std::conj(xi) / xi;
    });
}

SpectralField beurling(const SpectralField& f) {
    if (std::abs(f.mean()) > 1e-12 * (1.0 + norm_l2(f)))
        throw ConfigError("beurling", "input must have zero mean");
    return beurling_raw(f);
}

SpectralField d_complex(const SpectralField& f) {
    return apply_multiplier(f, [](double k1, double k2) -> std::complex<double> {
        return std::complex<double>(0.0, 0.5) * std::complex<double>(k1, -k2);
    });
}

SpectralField dbar_complex(const SpectralField& f) {
    return apply_multiplier(f, [](double k1, double k2) -> std::complex<double> {
        return std::complex<double>(0.0, 0.5) * std::complex<double>(k1, k2);
    });
}

SpectralField d_inverse(const SpectralField& g) {
    return apply_multiplier(g, [](double k1, double k2) -> std::complex<double> {
        if (k1 == 0.0 && k2 == 0.0) return {0.0, 0.0};
        return 1.0 / (std::complex<double>(0.0, 0.5) * std::complex<double>(k1, -k2));
    });
}

ResolventResult neumann_resolvent(const SpectralField& mu, const SpectralField& phi,
                                  const ResolventConfig& cfg) {
    cfg.validate();
    if (mu.torus != phi.torus) throw ConfigError("resolvent", "grid mismatch");
    if (std::abs(phi.mean()) > 1e-10 * (1.0 + norm_l2(phi)))
        throw ConfigError("resolvent", "Phi must have zero mean");
    double kmax = 0.0;
    for (const auto& z : mu.v) kmax = std::max(kmax, std::abs(z));
    if (kmax >= 1.0) throw ConfigError("resolvent", "||mu||_inf must be < 1");

    ResolventResult res;
    res.g = phi;
    for (int it = 0; it < cfg.max_iter; ++it) {
        SpectralField sg = beurling_raw(res.g);
        SpectralField g_next = phi;
        for (std::size_t i = 0; i < g_next.v.size(); ++i) g_next.v[i] += mu.v[i] * sg.v[i];
        const double upd = norm_l2(g_next - res.g);
        res.residual_history.push_back(upd);
        res.g = std::move(g_next);
        res.iterations = it + 1;
        if (upd <= cfg.tol) {
            res.converged = true;
            break;
        }
    }
    // True residual of the resolvent equation.
    {
        SpectralField sg = beurling_raw(res.g);
        SpectralField r = res.g;
        for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] -= mu.v[i] * sg.v[i] + phi.v[i];
        res.final_residual = norm_l2(r);
    }
    // Late-iteration contraction ratio (median of the last few updates).
    if (res.residual_history.size() >= 3) {
        std::vector<double> ratios;
        const std::size_t n = res.residual_history.size();
        const std::size_t lo = n > 6 ? n - 6 : 1;
        for (std::size_t i = lo; i < n; ++i) {
            if (res.residual_history[i - 1] > 0.0)
                ratios.push_back(res.residual_history[i] / res.residual_history[i - 1]);
        }
        if (!ratios.empty()) {
            std::sort(ratios.begin(), ratios.end());
            res.contraction_ratio = ratios[ratios.size() / 2];
        }
    }
    for (double q : cfg.q_exponents) res.lq_norms.emplace_back(q, norm_lq(res.g, q));
    if (!res.converged)
        throw NumericError(res.iterations,
                           "Neumann iteration exceeded max_iter (observed ratio " +
                               std::to_string(res.contraction_ratio) + ")");
    return res;
}

BeltramiSolveResult solve_beltrami(const SpectralField& mu, const SpectralField& src,
                                   const ResolventConfig& cfg) {
    cfg.validate();
    if (mu.torus != src.torus) throw ConfigError("beltrami", "grid mismatch");
    BeltramiSolveResult out;
    SpectralField g(src.torus);
    int it = 0;
    for (; it < cfg.max_iter; ++it) {
        SpectralField q = src;
        for (std::size_t i = 0; i < q.v.size(); ++i) q.v[i] += mu.v[i] * g.v[i];
        SpectralField g_next = beurling_raw(q);
        const double upd = norm_l2(g_next - g);
        g = std::move(g_next);
        if (upd <= cfg.tol) {
            out.converged = true;
            ++it;
            break;
        }
    }
    out.iterations = it;
    if (!out.converged)
        throw NumericError(it, "Beltrami fixed point exceeded max_iter");
    out.f = d_inverse(g);
    out.g = g;
    {
        SpectralField r = dbar_complex(out.f);
        for (std::size_t i = 0; i < r.v.size(); ++i)
            r.v[i] -= mu.v[i] * g.v[i] + src.v[i];
        out.residual = norm_l2(r);
        SpectralField q = src;
        for (std::size_t i = 0; i < q.v.size(); ++i) q.v[i] += mu.v[i] * g.v[i];
        out.defect = std::abs(q.mean());
    }
    return out;
}

namespace {

// Periodic Q1 assembly of -div(sigma_mu grad .) on the torus (route (a) of
// the cross-validation): same local kernel as the Dirichlet operator, wrapped
// indices, unknowns at all n^2 nodes, constants projected out.
struct PeriodicOperator {
    Torus torus;
    std::array<std::vector<double>, 9> band;
    static constexpr std::array<std::pair<int, int>, 9> offsets = {{
        {0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, 1}, {1, -1}, {-1, -1},
    }};

    void apply(const std::vector<double>& x, std::vector<double>& y) const {
        const int n = torus.n;
        const double inv_mass = 1.0 / (torus.h() * torus.h());
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                const std::size_t k = torus.index(i, j);
                double acc = 0.0;
                for (int b = 0; b < 9; ++b) {
                    const auto [di, dj] = offsets[b];
                    const int ii = (i + di + n) % n;
                    const int jj = (j + dj + n) % n;
                    acc += band[b][k] * x[torus.index(ii, jj)];
                }
                y[k] = acc * inv_mass;
            }
        }
    }
};

PeriodicOperator assemble_periodic(const SpectralField& mu) {
    double kmax = 0.0;
    for (const auto& z : mu.v) kmax = std::max(kmax, std::abs(z));
    if (kmax >= 1.0 - 1e-8) throw ConfigError("beltrami.mu", "|mu| must stay below 1");

    const Torus t = mu.torus;
    const int n = t.n;
    std::vector<double> s11(t.count()), s12(t.count()), s22(t.count());
    for (std::size_t k = 0; k < t.count(); ++k) {
        const std::complex<double> m = mu.v[k];
        const double d = 1.0 - std::norm(m);
        s11[k] = std::norm(1.0 - m) / d;
        s12[k] = -2.0 * m.imag() / d;
        s22[k] = std::norm(1.0 + m) / d;
    }

    PeriodicOperator A;
    A.torus = t;
    for (auto& b : A.band) b.assign(t.count(), 0.0);
    const double h = t.h();
    const double a = 1.0 / h;
    const double wq = 0.25 * h * h;

    int band_of[3][3];
    for (int b = 0; b < 9; ++b) {
        const auto [di, dj] = PeriodicOperator::offsets[b];
        band_of[di + 1][dj + 1] = b;
    }
    // Same corner-quadrature gradient table as the Dirichlet assembly.
    static const double GX[4][4] = {{-1, -1, 0, 0}, {1, 1, 0, 0}, {0, 0, -1, -1}, {0, 0, 1, 1}};
    static const double GY[4][4] = {{-1, 0, -1, 0}, {0, -1, 0, -1}, {1, 0, 1, 0}, {0, 1, 0, 1}};

    for (int cj = 0; cj < n; ++cj) {
        for (int ci = 0; ci < n; ++ci) {
            const int ip = (ci + 1) % n, jp = (cj + 1) % n;
            const std::size_t c[4] = {t.index(ci, cj), t.index(ip, cj), t.index(ci, jp),
                                      t.index(ip, jp)};
            const double m11 = 0.25 * (s11[c[0]] + s11[c[1]] + s11[c[2]] + s11[c[3]]);
            const double m12 = 0.25 * (s12[c[0]] + s12[c[1]] + s12[c[2]] + s12[c[3]]);
            const double m22 = 0.25 * (s22[c[0]] + s22[c[1]] + s22[c[2]] + s22[c[3]]);

            double K[4][4];
            for (int p = 0; p < 4; ++p) {
                for (int q = p; q < 4; ++q) {
                    double acc = 0.0;
                    for (int cq = 0; cq < 4; ++cq) {
                        const double gax = GX[p][cq] * a, gay = GY[p][cq] * a;
                        const double gbx = GX[q][cq] * a, gby = GY[q][cq] * a;
                        acc += m11 * gax * gbx + m12 * (gax * gby + gay * gbx) +
                               m22 * gay * gby;
                    }
                    K[p][q] = K[q][p] = wq * acc;
                }
            }
            const int gi[4] = {ci, ip, ci, ip};
            const int gj[4] = {cj, cj, jp, jp};
            for (int p = 0; p < 4; ++p) {
                const std::size_t row = t.index(gi[p], gj[p]);
                for (int q = 0; q < 4; ++q) {
                    int di = gi[q] - gi[p];
                    int dj = gj[q] - gj[p];
                    if (di > 1) di -= n;
                    if (di < -1) di += n;
                    if (dj > 1) dj -= n;
                    if (dj < -1) dj += n;
                    A.band[band_of[di + 1][dj + 1]][row] += K[p][q];
                }
            }
        }
    }
    return A;
}

void project_zero_mean(std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m += v;
    m /= x.size();
    for (double& v : x) v -= m;
}

} // namespace

std::vector<double> periodic_divform_solve(const SpectralField& mu,
                                           const std::vector<double>& rhs, double tol,
                                           int* iterations) {
    const PeriodicOperator A = assemble_periodic(mu);
    std::vector<double> b = rhs;
    project_zero_mean(b);

    std::vector<double> x(b.size(), 0.0), r = b, p = b, Ap(b.size());
    double rnorm_ref = 0.0;
    for (double v : b) rnorm_ref += v * v;
    rnorm_ref = std::sqrt(rnorm_ref);
    if (rnorm_ref == 0.0) {
        if (iterations) *iterations = 0;
        return x;
    }
    double rr = rnorm_ref * rnorm_ref;
    const long cap = 20 * static_cast<long>(b.size());
    int it = 0;
    for (; it < cap; ++it) {
        A.apply(p, Ap);
        project_zero_mean(Ap);
        double pAp = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) pAp += p[k] * Ap[k];
        if (!(pAp > 0.0)) break;
        const double alpha = rr / pAp;
        for (std::size_t k = 0; k < x.size(); ++k) {
            x[k] += alpha * p[k];
            r[k] -= alpha * Ap[k];
        }
        double rr_new = 0.0;
        for (double v : r) rr_new += v * v;
        if (std::sqrt(rr_new) <= tol * rnorm_ref) {
            rr = rr_new;
            ++it;
            break;
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t k = 0; k < p.size(); ++k) p[k] = r[k] + beta * p[k];
    }
    if (iterations) *iterations = it;
    project_zero_mean(x);
    return x;
}

CrossValidationReport cross_validate_divform(const SpectralField& mu, const SpectralField& F1,
                                             const SpectralField& F2,
                                             const ResolventConfig& cfg) {
    if (mu.torus != F1.torus || mu.torus != F2.torus)
        throw ConfigError("beltrami", "cross-validation grid mismatch");
    CrossValidationReport rep;

    // rhs = div F computed spectrally and sampled at the nodes.
    SpectralField divF(F1.torus);
    {
        SpectralField dF1 = apply_multiplier(F1, [](double k1, double) {
            return std::complex<double>(0.0, k1);
        });
        SpectralField dF2 = apply_multiplier(F2, [](double, double k2) {
            return std::complex<double>(0.0, k2);
        });
        for (std::size_t i = 0; i < divF.v.size(); ++i) divF.v[i] = dF1.v[i] + dF2.v[i];
    }
    std::vector<double> rhs(divF.v.size());
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = divF.v[i].real();

    const std::vector<double> u_a =
        periodic_divform_solve(mu, rhs, std::min(cfg.tol, 1e-11), &rep.cg_iterations);

    // Route (b): Phi = -1/2 (F_c + mu conj(F_c)), dbar f = mu d f + Phi.
    SpectralField src(mu.torus);
    for (std::size_t i = 0; i < src.v.size(); ++i) {
        const std::complex<double> Fc(F1.v[i].real(), F2.v[i].real());
        src.v[i] = -0.5 * (Fc + mu.v[i] * std::conj(Fc));
    }
    const BeltramiSolveResult bs = solve_beltrami(mu, src, cfg);
    rep.defect = bs.defect;
    rep.beltrami_iterations = bs.iterations;

    std::vector<double> u_b(bs.f.v.size());
    double mean_b = 0.0;
    for (std::size_t i = 0; i < u_b.size(); ++i) {
        u_b[i] = bs.f.v[i].real();
        mean_b += u_b[i];
    }
    mean_b /= u_b.size();

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < u_b.size(); ++i) {
        const double d = u_a[i] - (u_b[i] - mean_b);
        num += d * d;
        den += (u_b[i] - mean_b) * (u_b[i] - mean_b);
    }
    rep.discrepancy_rel = std::sqrt(num / std::max(den, 1e-300));
    return rep;
}

} // namespace memoryheat
