#pragma once

#include <string>
#include <utility>
#include <vector>

#include "memoryheat/errors.hpp"

namespace memoryheat {

// Memory kernel pair (kappa, h) with kappa(s) = kappa0 - int_0^s h and the
// normalization int kappa = int s h = 1. Two representations:
//   - ExponentialSum: h(s) = sum_j b_j a_j^2 exp(-a_j s), all closed-form.
//   - Sampled: (s_i, h_i) nodes with monotone cubic interpolation and
//     exactly integrated kappa; (K1)/(K2) certified at the nodes only.
class MemoryKernel {
public:
    struct Mode {
        double b; // weight, sum_j b_j = 1
        double a; // rate > 0
    };

    enum class Repr { ExponentialSum, Sampled };

    Repr repr() const { return repr_; }
    double kappa0() const { return kappa0_; }
    double theta() const { return theta_; }
    double s_max() const { return s_max_; }
    const std::vector<Mode>& modes() const { return modes_; }
    const std::vector<double>& s_nodes() const { return s_nodes_; }
    const std::vector<double>& h_values() const { return h_values_; }

    double h_of(double s) const;
    double kappa_of(double s) const;

    // int_{lo}^{hi} h(s) ds: closed form for exp sums, exact integral of the
    // monotone-cubic interpolant for sampled kernels.
    double integral_h(double lo, double hi) const;

    static MemoryKernel from_exponential_sum(std::vector<Mode> modes, bool rescale = false);
    static MemoryKernel from_samples(std::vector<double> s_nodes, std::vector<double> h_values,
                                     bool rescale = false);
    static MemoryKernel from_csv(const std::string& path, bool rescale = false);

private:
    MemoryKernel() = default;
    double cumulative_h(double s) const; // sampled repr

    Repr repr_ = Repr::ExponentialSum;
    std::vector<Mode> modes_;
    std::vector<double> s_nodes_;  // sampled repr
    std::vector<double> h_values_; // sampled repr
    std::vector<double> slopes_;   // monotone cubic slopes
    std::vector<double> cum_at_nodes_;
    double kappa0_ = 1.0;
    double theta_ = 1.0;
    double s_max_ = 40.0;
};

struct KernelReport {
    bool k1_ok = false;              // nonnegative, non-increasing
    bool k2_ok = false;              // kappa <= Theta h at checked s
    double normalization_error = 0.0; // |int s h - 1|
    double theta_min = 0.0;           // sup over checked s of kappa/h
    bool exp_decay_ok = false;        // kappa(s) <= kappa0 exp(-s/Theta)
    double kappa_min = 0.0;           // min kappa over checked s (>= 0 for K1)
    bool certified_at_nodes_only = false; // sampled kernels
};

// (K1)/(K2)/normalization report. Exponential sums are checked with closed
// forms plus 1000 log-spaced evaluation points; sampled kernels only at
// their own nodes.
KernelReport validate_kernel(const MemoryKernel& k);

} // namespace memoryheat
