#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gwqs {

// Dense row-major square matrix.
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

    static SquareMatrix identity(std::size_t n) {
        SquareMatrix m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t size() const noexcept { return n_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * n_, n_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }

    double row_sum(std::size_t i) const {
        double s = 0.0;
        for (double x : row(i)) s += x;
        return s;
    }

    // y = x^T M, accumulated row by row in a fixed order.
    std::vector<double> left_multiply(std::span<const double> x) const {
        std::vector<double> y(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            const double xi = x[i];
            if (xi == 0.0) continue;
            const double* r = data_.data() + i * n_;
            for (std::size_t j = 0; j < n_; ++j) y[j] += xi * r[j];
        }
        return y;
    }

    std::span<const double> data() const noexcept { return data_; }

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

}  // namespace gwqs
