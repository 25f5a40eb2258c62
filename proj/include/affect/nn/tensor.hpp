#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace affect::nn {

/// Dense row-major matrix of doubles. Vectors are 1 x n.
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    std::size_t size() const noexcept { return data.size(); }
    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool same_shape(const Tensor& o) const noexcept { return rows == o.rows && cols == o.cols; }
    void zero() { std::fill(data.begin(), data.end(), 0.0); }

    bool operator==(const Tensor&) const = default;
};

} // namespace affect::nn
