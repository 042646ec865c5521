#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mlsvm {

/// Dense row-major matrix of doubles. Rows are samples, columns are features.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, value) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool empty() const noexcept { return rows_ == 0; }

    [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    [[nodiscard]] std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }

    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
    [[nodiscard]] double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }

    [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }

    void append_row(std::span<const double> values);

    /// Rows `indices` copied in the given order.
    [[nodiscard]] Matrix select_rows(std::span<const std::size_t> indices) const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

[[nodiscard]] double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;
[[nodiscard]] double euclidean_distance(std::span<const double> a, std::span<const double> b) noexcept;

}  // namespace mlsvm
