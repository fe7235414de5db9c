#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dising {

/// Natural-log binary entropy H(p) = -p log p - (1-p) log(1-p) on [0,1],
/// with H(0) = H(1) = 0 by continuity.
inline double binary_entropy(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("binary_entropy: p must lie in [0,1]");
    if (p == 0.0 || p == 1.0) return 0.0;
    return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
}

/// log C(n, k) via lgamma; exact integer arithmetic is not needed at the
/// tolerances the oracles certify (1e-9 on sums of a few hundred terms).
inline double log_choose(int n, int k) {
    if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

/// Streaming max-shifted log-sum-exp; finite for any finite inputs, in one pass.
class LogSumExp {
public:
    void add(double e) {
        if (e == -std::numeric_limits<double>::infinity()) return;
        if (e <= max_) {
            acc_ += std::exp(e - max_);
        } else {
            acc_ = acc_ * std::exp(max_ - e) + 1.0;
            max_ = e;
        }
    }

    double value() const {
        if (acc_ == 0.0) return -std::numeric_limits<double>::infinity();
        return max_ + std::log(acc_);
    }

private:
    double max_ = -std::numeric_limits<double>::infinity();
    double acc_ = 0.0;
};

} // namespace dising
