#include "pavetwin/matrix.hpp"

#include "pavetwin/errors.hpp"
#include "pavetwin/simd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pavetwin {

namespace {

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(op) + ": " + shape(a) + " vs " + shape(b));
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError("matrix data length " + std::to_string(data_.size()) + " does not match " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw ShapeError("ragged matrix literal");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + shape(a) + " * " + shape(b));
    }
    const auto& k = simd::active();
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* out = c.row(i).data();
        for (std::size_t p = 0; p < a.cols(); ++p) {
            const double s = a(i, p);
            if (s != 0.0) {
                k.axpy(s, b.row(p).data(), out, b.cols());
            }
        }
    }
    return c;
}

Matrix matmul_transpose_b(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_transpose_b: " + shape(a) + " * (" + shape(b) + ")^T");
    }
    const auto& k = simd::active();
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i).data();
        for (std::size_t j = 0; j < b.rows(); ++j) {
            c(i, j) = k.dot(ai, b.row(j).data(), a.cols());
        }
    }
    return c;
}

Matrix matmul_transpose_a(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("matmul_transpose_a: (" + shape(a) + ")^T * " + shape(b));
    }
    const auto& k = simd::active();
    Matrix c(a.cols(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* bi = b.row(i).data();
        for (std::size_t p = 0; p < a.cols(); ++p) {
            const double s = a(i, p);
            if (s != 0.0) {
                k.axpy(s, bi, c.row(p).data(), b.cols());
            }
        }
    }
    return c;
}

Matrix add(const Matrix& a, const Matrix& b) {
    Matrix c = a;
    add_in_place(c, b);
    return c;
}

void add_in_place(Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    simd::active().axpy(1.0, b.values().data(), a.values().data(), a.size());
}

Matrix scale(const Matrix& a, double s) {
    Matrix c = a;
    for (double& x : c.values()) {
        x *= s;
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            t(j, i) = a(i, j);
        }
    }
    return t;
}

void add_row_broadcast(Matrix& a, const Matrix& bias) {
    if (bias.rows() != 1 || bias.cols() != a.cols()) {
        throw ShapeError("add_row_broadcast: " + shape(a) + " + " + shape(bias));
    }
    const auto& k = simd::active();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        k.axpy(1.0, bias.values().data(), a.row(i).data(), a.cols());
    }
}

Matrix column_sums(const Matrix& a) {
    Matrix s(1, a.cols());
    const auto& k = simd::active();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        k.axpy(1.0, a.row(i).data(), s.values().data(), a.cols());
    }
    return s;
}

Matrix relu(const Matrix& a) {
    Matrix out(a.rows(), a.cols());
    simd::active().relu(a.values().data(), out.values().data(), a.size());
    return out;
}

Matrix relu_backward(const Matrix& grad, const Matrix& pre_activation) {
    require_same_shape(grad, pre_activation, "relu_backward");
    Matrix out(grad.rows(), grad.cols());
    simd::active().relu_backward(grad.values().data(), pre_activation.values().data(),
                                 out.values().data(), grad.size());
    return out;
}

}  // namespace pavetwin
