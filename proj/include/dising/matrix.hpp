#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace dising {

/// Dense row-major square matrix of doubles. Just storage plus the few
/// entrywise operations the cut machinery needs.
class Matrix {
public:
    Matrix() : n_(0) {}
    explicit Matrix(int n) : n_(n), data_(static_cast<std::size_t>(n) * n, 0.0) {}

    int n() const { return n_; }

    double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * n_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * n_ + j]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    double frobenius_sq() const {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return s;
    }

    double abs_sum() const {
        double s = 0.0;
        for (double v : data_) s += std::abs(v);
        return s;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    int n_;
    std::vector<double> data_;
};

} // namespace dising
