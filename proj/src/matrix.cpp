// SPDX-License-Identifier: Apache-2.0
#include "marginlab/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "marginlab/error.hpp"

namespace marginlab {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (!a.same_shape(b)) {
        throw Error(ErrorCode::dimension_mismatch,
                    std::string(what) + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                        " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows * cols) {
        throw Error(ErrorCode::dimension_mismatch, "matrix: value count does not match shape");
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw Error(ErrorCode::dimension_mismatch, "matrix: ragged initializer");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(std::span<const double> values) {
    Matrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

bool Matrix::is_zero() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return x == 0.0; });
}

double Matrix::max_abs() const noexcept {
    double m = 0.0;
    for (double x : data_) m = std::max(m, std::abs(x));
    return m;
}

Matrix& Matrix::operator+=(const Matrix& other) {
    require_same_shape(*this, other, "matrix +=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    require_same_shape(*this, other, "matrix -=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
    for (double& x : data_) x *= s;
    return *this;
}

void Matrix::add_scaled(const Matrix& other, double s) {
    require_same_shape(*this, other, "matrix add_scaled");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * other.data_[i];
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw Error(ErrorCode::dimension_mismatch, "matmul: inner dimensions differ");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto orow = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            auto brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw Error(ErrorCode::dimension_mismatch, "matmul_transposed: column counts differ");
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto arow = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            auto brow = b.row(j);
            // four partial sums break the add dependency chain
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            std::size_t k = 0;
            for (; k + 4 <= arow.size(); k += 4) {
                s0 += arow[k] * brow[k];
                s1 += arow[k + 1] * brow[k + 1];
                s2 += arow[k + 2] * brow[k + 2];
                s3 += arow[k + 3] * brow[k + 3];
            }
            for (; k < arow.size(); ++k) s0 += arow[k] * brow[k];
            out(i, j) = (s0 + s1) + (s2 + s3);
        }
    }
    return out;
}

Matrix transposed_matmul(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw Error(ErrorCode::dimension_mismatch, "transposed_matmul: row counts differ");
    Matrix out(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        auto arow = a.row(k);
        auto brow = b.row(k);
        for (std::size_t i = 0; i < arow.size(); ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            auto orow = out.row(i);
            for (std::size_t j = 0; j < brow.size(); ++j) orow[j] += aki * brow[j];
        }
    }
    return out;
}

double inner(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "inner");
    double s = 0.0;
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
    return s;
}

}  // namespace marginlab
