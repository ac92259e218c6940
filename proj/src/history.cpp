#include "memoryheat/history.hpp"

#include <algorithm>
#include <cmath>

namespace memoryheat {

namespace {

// G(z) = int_0^1 exp(-z t) t dt, H(z) = int_0^1 exp(-z t) (1-t) dt.
double ramp_up(double z) {
    if (std::abs(z) < 1e-4) return 0.5 - z / 3.0 + z * z / 8.0;
    return (1.0 - std::exp(-z) * (1.0 + z)) / (z * z);
}
double ramp_down(double z) {
    if (std::abs(z) < 1e-4) return 0.5 - z / 6.0 + z * z / 24.0;
    return (z - 1.0 + std::exp(-z)) / (z * z);
}

// int hat_i(s) * exp(-a s) ds over the hat support; node 0 of the mesh is
// s=0 where the hat family starts at zero (trace condition).
std::vector<double> exp_hat_weights(const std::vector<double>& s, double a) {
    const std::size_t n = s.size();
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double sl = (i == 0) ? 0.0 : s[i - 1];
        const double dl = s[i] - sl;
        w[i] += std::exp(-a * sl) * ramp_up(a * dl) * dl;
        if (i + 1 < n) {
            const double dr = s[i + 1] - s[i];
            w[i] += std::exp(-a * s[i]) * ramp_down(a * dr) * dr;
        }
    }
    return w;
}

std::vector<double> trapezoid_weights(const std::vector<double>& s) {
    const std::size_t n = s.size();
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double sl = (i == 0) ? 0.0 : s[i - 1];
        w[i] += 0.5 * (s[i] - sl);
        if (i + 1 < n) w[i] += 0.5 * (s[i + 1] - s[i]);
    }
    return w;
}

} // namespace

SGrid SGrid::geometric(double s_max, double s_min, int nodes_per_decade) {
    if (!(s_max > 0.0) || !(s_min > 0.0) || s_min >= s_max)
        throw ConfigError("history.s_grid", "need 0 < s_min < s_max");
    const double decades = std::log10(s_max / s_min);
    const int n = std::max(4, static_cast<int>(std::ceil(nodes_per_decade * decades)) + 1);
    SGrid g;
    g.s_max = s_max;
    g.s.resize(n);
    for (int i = 0; i < n; ++i)
        g.s[i] = s_min * std::pow(s_max / s_min, static_cast<double>(i) / (n - 1));
    g.s.back() = s_max;
    return g;
}

int nodes_per_decade_for(double dt) {
    const double npd = 2.2 / std::sqrt(std::max(dt, 1e-12));
    return std::clamp(static_cast<int>(std::ceil(npd)), 24, 256);
}

SQuadrature::SQuadrature(std::shared_ptr<const MemoryKernel> kernel, SGrid sgrid)
    : kernel_(std::move(kernel)), sgrid_(std::move(sgrid)) {
    trap_w_ = trapezoid_weights(sgrid_.s);
    if (kernel_->repr() == MemoryKernel::Repr::ExponentialSum) {
        for (const auto& m : kernel_->modes()) {
            auto base = exp_hat_weights(sgrid_.s, m.a);
            std::vector<double> wh(base.size()), wk(base.size());
            for (std::size_t i = 0; i < base.size(); ++i) {
                wh[i] = m.b * m.a * m.a * base[i];
                wk[i] = m.b * m.a * base[i];
            }
            mode_w_h_.push_back(std::move(wh));
            mode_w_kappa_.push_back(std::move(wk));
        }
    }
}

std::vector<double> SQuadrature::weights_h(double shift) const {
    const std::size_t n = sgrid_.s.size();
    std::vector<double> w(n, 0.0);
    if (kernel_->repr() == MemoryKernel::Repr::ExponentialSum) {
        const auto& modes = kernel_->modes();
        for (std::size_t j = 0; j < modes.size(); ++j) {
            const double f = std::exp(-modes[j].a * shift);
            for (std::size_t i = 0; i < n; ++i) w[i] += f * mode_w_h_[j][i];
        }
    } else {
        for (std::size_t i = 0; i < n; ++i)
            w[i] = kernel_->h_of(sgrid_.s[i] + shift) * trap_w_[i];
    }
    return w;
}

std::vector<double> SQuadrature::weights_kappa(double shift) const {
    const std::size_t n = sgrid_.s.size();
    std::vector<double> w(n, 0.0);
    if (kernel_->repr() == MemoryKernel::Repr::ExponentialSum) {
        const auto& modes = kernel_->modes();
        for (std::size_t j = 0; j < modes.size(); ++j) {
            const double f = std::exp(-modes[j].a * shift);
            for (std::size_t i = 0; i < n; ++i) w[i] += f * mode_w_kappa_[j][i];
        }
    } else {
        for (std::size_t i = 0; i < n; ++i)
            w[i] = kernel_->kappa_of(sgrid_.s[i] + shift) * trap_w_[i];
    }
    return w;
}

std::vector<double> SQuadrature::weights_mode(double rate) const {
    auto base = exp_hat_weights(sgrid_.s, rate);
    for (double& x : base) x *= rate;
    return base;
}

PastHistory PastHistory::constant(GridFunction u) {
    PastHistory p;
    p.kind = Kind::ConstantPast;
    p.profile = std::move(u);
    return p;
}

PastHistory PastHistory::exponential(double rate, GridFunction g) {
    if (!(rate > 0.0)) throw ConfigError("past.exp_past.rate", "rate must be > 0");
    PastHistory p;
    p.kind = Kind::ExpPast;
    p.rate = rate;
    p.profile = std::move(g);
    return p;
}

RingBufferHistory::RingBufferHistory(const Grid& grid, std::shared_ptr<const SQuadrature> quad,
                                     double dt)
    : grid_(grid), quad_(std::move(quad)), dt_(dt), u_total_(grid) {
    if (!(dt > 0.0)) throw ConfigError("history", "ring buffer needs dt > 0");
    capacity_ = static_cast<std::size_t>(std::ceil(quad_->sgrid().s_max / dt)) + 2;
}

void RingBufferHistory::set_initial_history(const PastHistory& past) {
    const auto& s = quad_->sgrid().s;
    eta0_.clear();
    switch (past.kind) {
    case PastHistory::Kind::Zero:
        return;
    case PastHistory::Kind::ConstantPast: {
        eta0_.reserve(s.size());
        for (double si : s) eta0_.push_back(si * past.profile);
        return;
    }
    case PastHistory::Kind::ExpPast: {
        eta0_.reserve(s.size());
        for (double si : s)
            eta0_.push_back((-std::expm1(-past.rate * si) / past.rate) * past.profile);
        return;
    }
    case PastHistory::Kind::Custom: {
        if (!past.custom) throw ConfigError("past", "custom past history not evaluable");
        // eta0(s) = int_0^s u(., -y) dy by cumulative trapezoid on the s-grid.
        eta0_.reserve(s.size());
        GridFunction acc(grid_);
        GridFunction prev = past.custom(0.0);
        double sprev = 0.0;
        for (double si : s) {
            GridFunction cur = past.custom(si);
            const double half = 0.5 * (si - sprev);
            axpy(half, prev, acc);
            axpy(half, cur, acc);
            eta0_.push_back(acc);
            prev = std::move(cur);
            sprev = si;
        }
        return;
    }
    }
}

GridFunction RingBufferHistory::eta0_interp(double s) const {
    const double sp = s - shift_;
    if (eta0_.empty() || sp <= 0.0) return GridFunction(grid_);
    const auto& nodes = quad_->sgrid().s;
    if (sp >= nodes.back()) return eta0_.back();
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), sp);
    const std::size_t i = static_cast<std::size_t>(it - nodes.begin());
    if (i == 0) {
        // between (0, s_1): eta0 rises linearly from 0
        GridFunction out = eta0_.front();
        out *= sp / nodes.front();
        return out;
    }
    const double t = (sp - nodes[i - 1]) / (nodes[i] - nodes[i - 1]);
    GridFunction out = eta0_[i - 1];
    out *= (1.0 - t);
    axpy(t, eta0_[i], out);
    return out;
}

void RingBufferHistory::materialize_shift() {
    if (shift_ == 0.0) return;
    const auto& s = quad_->sgrid().s;
    std::vector<GridFunction> resampled;
    resampled.reserve(s.size());
    for (double si : s) resampled.push_back(eta0_interp(si));
    eta0_ = std::move(resampled);
    shift_ = 0.0;
}

void RingBufferHistory::evolve(const GridFunction& u_new, double dt) {
    if (std::abs(dt - dt_) > 1e-14 * dt_)
        throw ConfigError("history", "ring buffer dt mismatch");
    if (u_new.grid != grid_) throw ConfigError("history", "grid mismatch in evolve");
    materialize_shift();
    u_hist_.push_front(u_new);
    if (u_hist_.size() > capacity_) u_hist_.pop_back();
    axpy(dt_, u_new, u_total_);
    t_elapsed_ += dt_;
}

RingBufferHistory RingBufferHistory::translate(double t) const {
    if (t < 0.0) throw ConfigError("history", "translate needs t >= 0");
    if (!pure())
        throw ConfigError("history", "translate is defined for source-free histories only");
    RingBufferHistory out = *this;
    out.shift_ += t;
    return out;
}

GridFunction RingBufferHistory::eval(double s) const {
    if (s <= 0.0) return GridFunction(grid_); // trace condition eta(0)=0
    if (s >= t_elapsed_) {
        GridFunction out = eta0_interp(s - t_elapsed_);
        out += u_total_;
        return out;
    }
    // s < t: integral over the most recent window of length s.
    const std::size_t m =
        std::min(static_cast<std::size_t>(s / dt_), u_hist_.size());
    GridFunction out(grid_);
    for (std::size_t q = 0; q < m; ++q) axpy(dt_, u_hist_[q], out);
    const double r = s - static_cast<double>(m) * dt_;
    if (r > 0.0 && m < u_hist_.size()) axpy(r, u_hist_[m], out);
    return out;
}

std::vector<GridFunction> RingBufferHistory::eval_all() const {
    const auto& s = quad_->sgrid().s;
    std::vector<GridFunction> out;
    out.reserve(s.size());
    GridFunction acc(grid_);
    std::size_t m = 0;
    for (double si : s) {
        if (si < t_elapsed_) {
            const std::size_t mi =
                std::min(static_cast<std::size_t>(si / dt_), u_hist_.size());
            while (m < mi) {
                axpy(dt_, u_hist_[m], acc);
                ++m;
            }
            GridFunction val = acc;
            const double r = si - static_cast<double>(mi) * dt_;
            if (r > 0.0 && mi < u_hist_.size()) axpy(r, u_hist_[mi], val);
            out.push_back(std::move(val));
        } else {
            GridFunction val = eta0_interp(si - t_elapsed_);
            val += u_total_;
            out.push_back(std::move(val));
        }
    }
    return out;
}

GridFunction RingBufferHistory::memory_term(const DiscreteOperator& A) const {
    if (A.grid() != grid_) throw ConfigError("history", "grid mismatch in memory_term");
    const auto w = quad_->weights_h(shift_);
    GridFunction sum(grid_);
    if (pure()) {
        if (eta0_.empty()) return sum;
        for (std::size_t i = 0; i < eta0_.size(); ++i) axpy(w[i], eta0_[i], sum);
    } else {
        const auto samples = eval_all();
        for (std::size_t i = 0; i < samples.size(); ++i) axpy(w[i], samples[i], sum);
    }
    return A.apply(sum);
}

double RingBufferHistory::m_norm_sq(const DiscreteOperator& A, int r) const {
    const auto w = quad_->weights_h(shift_);
    double acc = 0.0;
    if (pure()) {
        for (std::size_t i = 0; i < eta0_.size(); ++i)
            acc += w[i] * v_norm_sq(A, eta0_[i], r);
        return acc;
    }
    const auto samples = eval_all();
    for (std::size_t i = 0; i < samples.size(); ++i)
        acc += w[i] * v_norm_sq(A, samples[i], r);
    return acc;
}

double RingBufferHistory::tail_u(const DiscreteOperator& A, int r) const {
    const auto w = quad_->weights_kappa(shift_);
    double acc = 0.0;
    if (pure()) {
        for (std::size_t i = 0; i < eta0_.size(); ++i)
            acc += w[i] * v_norm_sq(A, eta0_[i], r);
        return 0.5 * acc;
    }
    const auto samples = eval_all();
    for (std::size_t i = 0; i < samples.size(); ++i)
        acc += w[i] * v_norm_sq(A, samples[i], r);
    return 0.5 * acc;
}

double RingBufferHistory::kappa_cross(const DiscreteOperator& A, const GridFunction& u,
                                      int r) const {
    const auto w = quad_->weights_kappa(shift_);
    // sum_i W_i <u, eta(s_i)>_{V^r} = <u, sum_i W_i eta(s_i)>_{V^r}
    GridFunction sum(grid_);
    if (pure()) {
        for (std::size_t i = 0; i < eta0_.size(); ++i) axpy(w[i], eta0_[i], sum);
    } else {
        const auto samples = eval_all();
        for (std::size_t i = 0; i < samples.size(); ++i) axpy(w[i], samples[i], sum);
    }
    return v_dot(A, u, sum, r);
}

MemoryNormReport m_norm(const RingBufferHistory& eta, const DiscreteOperator& A, int r) {
    if (r != 1 && r != 2) throw ConfigError("history", "m_norm supports r in {1,2}");
    MemoryNormReport rep;
    rep.r = r;
    rep.m_norm_sq = eta.m_norm_sq(A, r);
    rep.m_norm = std::sqrt(std::max(0.0, rep.m_norm_sq));
    rep.tail_u = eta.tail_u(A, r);
    const double theta = eta.quadrature().kernel().theta();
    if (rep.tail_u < -1e-12 || rep.tail_u > 0.5 * theta * rep.m_norm_sq + 1e-12)
        throw NumericError(0, "tail functional violates 0 <= U <= Theta/2 ||eta||^2");
    return rep;
}

ModeBankHistory::ModeBankHistory(const Grid& grid, std::shared_ptr<const MemoryKernel> kernel)
    : grid_(grid), kernel_(std::move(kernel)) {
    if (kernel_->repr() != MemoryKernel::Repr::ExponentialSum)
        throw ConfigError("history", "mode bank requires an exponential-sum kernel");
    zeta_.assign(kernel_->modes().size(), GridFunction(grid_));
}

void ModeBankHistory::set_initial_history(const PastHistory& past, const SQuadrature* quad) {
    const auto& modes = kernel_->modes();
    for (std::size_t j = 0; j < modes.size(); ++j) {
        const double a = modes[j].a;
        switch (past.kind) {
        case PastHistory::Kind::Zero:
            zeta_[j] = GridFunction(grid_);
            break;
        case PastHistory::Kind::ConstantPast:
            zeta_[j] = (1.0 / a) * past.profile;
            break;
        case PastHistory::Kind::ExpPast:
            zeta_[j] = (1.0 / (a + past.rate)) * past.profile;
            break;
        case PastHistory::Kind::Custom: {
            if (!quad)
                throw ConfigError("history",
                                  "custom past needs an s-quadrature for the mode projection");
            // zeta_j(0) = int a exp(-a s) eta0(s) ds
            const auto w = quad->weights_mode(a);
            const auto& s = quad->sgrid().s;
            GridFunction acc(grid_);
            GridFunction eta_acc(grid_);
            GridFunction prev = past.custom(0.0);
            double sprev = 0.0;
            for (std::size_t i = 0; i < s.size(); ++i) {
                GridFunction cur = past.custom(s[i]);
                const double half = 0.5 * (s[i] - sprev);
                axpy(half, prev, eta_acc);
                axpy(half, cur, eta_acc);
                axpy(w[i], eta_acc, acc);
                prev = std::move(cur);
                sprev = s[i];
            }
            zeta_[j] = std::move(acc);
            break;
        }
        }
    }
}

void ModeBankHistory::evolve(const GridFunction& u_new, double dt) {
    if (!(dt > 0.0)) throw ConfigError("history", "evolve needs dt > 0");
    if (u_new.grid != grid_) throw ConfigError("history", "grid mismatch in evolve");
    const auto& modes = kernel_->modes();
    for (std::size_t j = 0; j < modes.size(); ++j) {
        const double a = modes[j].a;
        const double decay = std::exp(-a * dt);
        const double gain = -std::expm1(-a * dt) / a; // (1 - e^{-a dt})/a
        GridFunction& z = zeta_[j];
        for (std::size_t k = 0; k < z.v.size(); ++k)
            z.v[k] = z.v[k] * decay + gain * u_new.v[k];
    }
}

GridFunction ModeBankHistory::weighted_sum() const {
    GridFunction sum(grid_);
    const auto& modes = kernel_->modes();
    for (std::size_t j = 0; j < modes.size(); ++j)
        axpy(modes[j].b * modes[j].a, zeta_[j], sum);
    return sum;
}

GridFunction ModeBankHistory::memory_term(const DiscreteOperator& A) const {
    if (A.grid() != grid_) throw ConfigError("history", "grid mismatch in memory_term");
    return A.apply(weighted_sum());
}

TailSample tail_sample(const RingBufferHistory& eta, const DiscreteOperator& A,
                       const GridFunction& u, int r) {
    TailSample s;
    s.tail_u = eta.tail_u(A, r);
    s.m_norm_sq = eta.m_norm_sq(A, r);
    s.cross = eta.kappa_cross(A, u, r);
    return s;
}

double tail_identity_residual(const std::vector<TailSample>& samples, double dt) {
    if (samples.size() < 3)
        throw ConfigError("history", "tail identity residual needs >= 3 samples");
    double worst = 0.0;
    for (std::size_t n = 0; n + 1 < samples.size(); ++n) {
        const TailSample& a = samples[n];
        const TailSample& b = samples[n + 1];
        const double dU = (b.tail_u - a.tail_u) / dt;
        const double mid_m = 0.5 * (a.m_norm_sq + b.m_norm_sq);
        const double mid_cross = 0.5 * (a.cross + b.cross);
        worst = std::max(worst, std::abs(dU + 0.5 * mid_m - mid_cross));
    }
    return worst;
}

} // namespace memoryheat
