#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace pavetwin {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    void fill(double value);
    bool all_finite() const noexcept;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// All operations throw ShapeError on incompatible shapes.

Matrix matmul(const Matrix& a, const Matrix& b);               // A * B
Matrix matmul_transpose_b(const Matrix& a, const Matrix& b);   // A * B^T
Matrix matmul_transpose_a(const Matrix& a, const Matrix& b);   // A^T * B
Matrix add(const Matrix& a, const Matrix& b);
void add_in_place(Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix transpose(const Matrix& a);
/// Adds the 1 x cols row vector `bias` to every row of `a`.
void add_row_broadcast(Matrix& a, const Matrix& bias);
/// 1 x cols matrix of column sums.
Matrix column_sums(const Matrix& a);

Matrix relu(const Matrix& a);
/// Gradient through ReLU given the pre-activation; zero where pre <= 0.
Matrix relu_backward(const Matrix& grad, const Matrix& pre_activation);

}  // namespace pavetwin
