#include "memoryheat/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace memoryheat {

namespace {

// Fritsch-Carlson monotone cubic slopes for the sampled representation;
// keeps the interpolant non-increasing wherever the data is.
std::vector<double> monotone_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> d(n, 0.0), sec(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) sec[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    d[0] = sec[0];
    d[n - 1] = sec[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (sec[i - 1] * sec[i] <= 0.0) {
            d[i] = 0.0;
        } else {
            const double dl = x[i] - x[i - 1], dr = x[i + 1] - x[i];
            const double w1 = 2.0 * dr + dl, w2 = dr + 2.0 * dl;
            d[i] = (w1 + w2) / (w1 / sec[i - 1] + w2 / sec[i]);
        }
    }
    return d;
}

double hermite_eval(double x0, double x1, double y0, double y1, double d0, double d1,
                    double s) {
    const double h = x1 - x0;
    const double t = (s - x0) / h;
    const double t2 = t * t, t3 = t2 * t;
    return y0 * (2 * t3 - 3 * t2 + 1) + h * d0 * (t3 - 2 * t2 + t) +
           y1 * (-2 * t3 + 3 * t2) + h * d1 * (t3 - t2);
}

// Exact integral of the Hermite cubic over its full interval.
double hermite_integral(double x0, double x1, double y0, double y1, double d0, double d1) {
    const double h = x1 - x0;
    return 0.5 * h * (y0 + y1) + h * h * (d0 - d1) / 12.0;
}

// 3-point Gauss-Legendre (exact through degree 5, enough for s * cubic).
template <typename F>
double gauss3(double lo, double hi, F&& f) {
    static const double xs[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static const double ws[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    const double c = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
    double acc = 0.0;
    for (int q = 0; q < 3; ++q) acc += ws[q] * f(c + r * xs[q]);
    return acc * r;
}

} // namespace

double MemoryKernel::h_of(double s) const {
    if (s < 0.0) throw ConfigError("kernel", "h_of requires s >= 0");
    if (repr_ == Repr::ExponentialSum) {
        double v = 0.0;
        for (const Mode& m : modes_) v += m.b * m.a * m.a * std::exp(-m.a * s);
        return v;
    }
    if (s <= s_nodes_.front()) return h_values_.front(); // flat stub at 0
    if (s >= s_nodes_.back()) return 0.0;
    const auto it = std::upper_bound(s_nodes_.begin(), s_nodes_.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - s_nodes_.begin());
    return std::max(0.0, hermite_eval(s_nodes_[i - 1], s_nodes_[i], h_values_[i - 1],
                                      h_values_[i], slopes_[i - 1], slopes_[i], s));
}

double MemoryKernel::kappa_of(double s) const {
    if (s < 0.0) throw ConfigError("kernel", "kappa_of requires s >= 0");
    if (repr_ == Repr::ExponentialSum) {
        double v = 0.0;
        for (const Mode& m : modes_) v += m.b * m.a * std::exp(-m.a * s);
        return v;
    }
    return std::max(0.0, kappa0_ - cumulative_h(s));
}

// int_0^s h for the sampled interpolant (exact per interval).
double MemoryKernel::cumulative_h(double s) const {
    if (s <= 0.0) return 0.0;
    if (s <= s_nodes_.front()) return s * h_values_.front();
    double acc = s_nodes_.front() * h_values_.front();
    if (s >= s_nodes_.back()) return cum_at_nodes_.back();
    const auto it = std::upper_bound(s_nodes_.begin(), s_nodes_.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - s_nodes_.begin());
    acc = cum_at_nodes_[i - 1];
    acc += gauss3(s_nodes_[i - 1], s, [&](double x) {
        return hermite_eval(s_nodes_[i - 1], s_nodes_[i], h_values_[i - 1], h_values_[i],
                            slopes_[i - 1], slopes_[i], x);
    });
    return acc;
}

double MemoryKernel::integral_h(double lo, double hi) const {
    if (hi <= lo) return 0.0;
    if (repr_ == Repr::ExponentialSum) {
        double v = 0.0;
        for (const Mode& m : modes_)
            v += m.b * m.a * (std::exp(-m.a * lo) - std::exp(-m.a * hi));
        return v;
    }
    return cumulative_h(hi) - cumulative_h(lo);
}

MemoryKernel MemoryKernel::from_exponential_sum(std::vector<Mode> modes, bool rescale) {
    if (modes.empty()) throw ConfigError("kernel.exp_sum", "needs at least one mode");
    double bsum = 0.0;
    double amin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < modes.size(); ++j) {
        if (!(modes[j].b > 0.0))
            throw ConfigError("kernel.exp_sum[" + std::to_string(j) + "][0]",
                              "weight must be > 0");
        if (!(modes[j].a > 0.0))
            throw ConfigError("kernel.exp_sum[" + std::to_string(j) + "][1]",
                              "rate must be > 0");
        bsum += modes[j].b;
        amin = std::min(amin, modes[j].a);
    }
    if (std::abs(bsum - 1.0) > 1e-12) {
        if (!rescale)
            throw ConfigError("kernel.exp_sum",
                              "weights sum to " + std::to_string(bsum) +
                                  " != 1 (set rescale to renormalize)");
        for (Mode& m : modes) m.b /= bsum;
    }
    MemoryKernel k;
    k.repr_ = Repr::ExponentialSum;
    k.modes_ = std::move(modes);
    k.kappa0_ = 0.0;
    for (const Mode& m : k.modes_) k.kappa0_ += m.b * m.a;
    k.theta_ = 1.0 / amin;
    // Tail int_{s_max}^inf kappa <= kappa0 Theta e^{-s_max/Theta} < 1e-10.
    k.s_max_ = 40.0 * k.theta_;
    return k;
}

MemoryKernel MemoryKernel::from_samples(std::vector<double> s_nodes,
                                        std::vector<double> h_values, bool rescale) {
    if (s_nodes.size() != h_values.size() || s_nodes.size() < 4)
        throw ConfigError("kernel.sampled", "need >= 4 matching (s,h) samples");
    for (std::size_t i = 0; i < s_nodes.size(); ++i) {
        if (!(s_nodes[i] > 0.0) || (i > 0 && s_nodes[i] <= s_nodes[i - 1]))
            throw ConfigError("kernel.sampled", "s nodes must be positive and increasing");
        if (!(h_values[i] >= 0.0))
            throw ConfigError("kernel.sampled", "h must be non-negative");
    }
    MemoryKernel k;
    k.repr_ = Repr::Sampled;
    k.s_nodes_ = std::move(s_nodes);
    k.h_values_ = std::move(h_values);
    k.slopes_ = monotone_slopes(k.s_nodes_, k.h_values_);

    auto rebuild = [&]() {
        k.cum_at_nodes_.assign(k.s_nodes_.size(), 0.0);
        double acc = k.s_nodes_.front() * k.h_values_.front(); // flat stub (0, s_1]
        k.cum_at_nodes_[0] = acc;
        for (std::size_t i = 1; i < k.s_nodes_.size(); ++i) {
            acc += hermite_integral(k.s_nodes_[i - 1], k.s_nodes_[i], k.h_values_[i - 1],
                                    k.h_values_[i], k.slopes_[i - 1], k.slopes_[i]);
            k.cum_at_nodes_[i] = acc;
        }
        k.kappa0_ = acc;
    };
    auto first_moment = [&]() {
        double m1 = 0.5 * k.s_nodes_.front() * k.s_nodes_.front() * k.h_values_.front();
        for (std::size_t i = 1; i < k.s_nodes_.size(); ++i) {
            const std::size_t j = i - 1;
            m1 += gauss3(k.s_nodes_[j], k.s_nodes_[i], [&](double x) {
                return x * hermite_eval(k.s_nodes_[j], k.s_nodes_[i], k.h_values_[j],
                                        k.h_values_[i], k.slopes_[j], k.slopes_[i], x);
            });
        }
        return m1;
    };
    rebuild();
    const double m1 = first_moment();
    if (std::abs(m1 - 1.0) > 1e-3) {
        if (!rescale)
            throw ConfigError("kernel.sampled",
                              "int s h = " + std::to_string(m1) +
                                  " is not normalized (set rescale to renormalize)");
        for (double& h : k.h_values_) h /= m1;
        for (double& d : k.slopes_) d /= m1;
        rebuild();
    }
    k.s_max_ = k.s_nodes_.back();
    // Theta certified at nodes: sup kappa/h where h > 0.
    double theta = 0.0;
    for (std::size_t i = 0; i < k.s_nodes_.size(); ++i) {
        const double kap = std::max(0.0, k.kappa0_ - k.cum_at_nodes_[i]);
        if (k.h_values_[i] > 0.0) theta = std::max(theta, kap / k.h_values_[i]);
    }
    if (!(theta > 0.0)) throw ConfigError("kernel.sampled", "cannot certify Theta from samples");
    k.theta_ = theta;
    return k;
}

MemoryKernel MemoryKernel::from_csv(const std::string& path, bool rescale) {
    std::ifstream in(path);
    if (!in) throw ConfigError("kernel.sampled.file", "cannot open " + path);
    std::vector<double> s, h;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double sv, hv;
        if (!(ls >> sv >> hv)) {
            if (s.empty()) continue; // tolerate a header row
            throw ConfigError("kernel.sampled.file", "malformed row: " + line);
        }
        s.push_back(sv);
        h.push_back(hv);
    }
    return from_samples(std::move(s), std::move(h), rescale);
}

KernelReport validate_kernel(const MemoryKernel& k) {
    KernelReport r;
    if (k.repr() == MemoryKernel::Repr::ExponentialSum) {
        // K1 holds termwise (positive weights, decaying exponentials); verify
        // monotonicity and positivity on a dense log grid anyway.
        const int n = 1000;
        const double lo = k.s_max() * 1e-6, hi = k.s_max();
        bool k1 = true, decay = true;
        double theta_min = 0.0;
        double kappa_min = std::numeric_limits<double>::infinity();
        double prev_h = k.h_of(0.0);
        for (int i = 0; i < n; ++i) {
            const double s = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
            const double hs = k.h_of(s);
            const double ks = k.kappa_of(s);
            if (hs < 0.0 || hs > prev_h * (1.0 + 1e-14)) k1 = false;
            if (ks < 0.0) k1 = false;
            kappa_min = std::min(kappa_min, ks);
            if (hs > 0.0) theta_min = std::max(theta_min, ks / hs);
            if (ks > k.kappa0() * std::exp(-s / k.theta()) * (1.0 + 1e-12)) decay = false;
            prev_h = hs;
        }
        double bsum = 0.0;
        for (const auto& m : k.modes()) bsum += m.b; // int s h = sum b_j exactly
        r.k1_ok = k1;
        r.normalization_error = std::abs(bsum - 1.0);
        r.theta_min = theta_min;
        r.k2_ok = theta_min <= k.theta() * (1.0 + 1e-12);
        r.exp_decay_ok = decay;
        r.kappa_min = kappa_min;
        return r;
    }
    // Sampled: certified at nodes only.
    const auto& s = k.s_nodes();
    const auto& h = k.h_values();
    bool k1 = true;
    for (std::size_t i = 1; i < s.size(); ++i)
        if (h[i] > h[i - 1] * (1.0 + 1e-12) + 1e-300) k1 = false;
    double theta_min = 0.0;
    double kappa_min = std::numeric_limits<double>::infinity();
    bool decay = true;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double ks = k.kappa_of(s[i]);
        kappa_min = std::min(kappa_min, ks);
        if (ks < 0.0) k1 = false;
        if (h[i] > 0.0) theta_min = std::max(theta_min, ks / h[i]);
        if (ks > k.kappa0() * std::exp(-s[i] / k.theta()) * (1.0 + 1e-10) + 1e-14) decay = false;
    }
    // int s h against the normalization (same rule as construction).
    double m1 = 0.5 * s[0] * s[0] * h[0];
    for (std::size_t i = 1; i < s.size(); ++i) {
        m1 += gauss3(s[i - 1], s[i], [&](double x) { return x * k.h_of(x); });
    }
    r.k1_ok = k1;
    r.k2_ok = theta_min <= k.theta() * (1.0 + 1e-12);
    r.normalization_error = std::abs(m1 - 1.0);
    r.theta_min = theta_min;
    r.exp_decay_ok = decay;
    r.kappa_min = kappa_min;
    r.certified_at_nodes_only = true;
    return r;
}

} // namespace memoryheat
