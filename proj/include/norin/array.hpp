#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace norin {

/// Dense row-major 2-D array of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool operator==(const Matrix&) const = default;
};

/// Dense row-major (N, T, C) array: window, time step, channel.
struct Array3 {
    std::size_t n = 0;
    std::size_t t = 0;
    std::size_t c = 0;
    std::vector<double> data;

    Array3() = default;
    Array3(std::size_t n_, std::size_t t_, std::size_t c_, double fill = 0.0)
        : n(n_), t(t_), c(c_), data(n_ * t_ * c_, fill) {}

    double& operator()(std::size_t i, std::size_t j, std::size_t k) { return data[(i * t + j) * c + k]; }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const { return data[(i * t + j) * c + k]; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Array3& o) const { return n == o.n && t == o.t && c == o.c; }

    bool operator==(const Array3&) const = default;
};

}  // namespace norin
