// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "osora/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "osora/errors.hpp"

namespace osora {

namespace {

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionMismatch(std::string(op) + ": " + shape(a) + " vs " + shape(b));
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw LengthMismatch("matrix data length " + std::to_string(data_.size()) +
                             " does not match " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw DimensionMismatch("ragged matrix literal");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
    Matrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    return m;
}

Matrix Matrix::column(std::span<const double> values) {
    return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Vector Matrix::col(std::size_t j) const {
    Vector out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
}

void Matrix::set_col(std::size_t j, std::span<const double> values) {
    if (values.size() != rows_) throw DimensionMismatch("set_col length");
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = values[i];
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
    require_same_shape(*this, other, "add");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    require_same_shape(*this, other, "subtract");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw DimensionMismatch("matmul: " + shape(a) + " * " + shape(b));
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto crow = c.row(i);
        for (std::size_t p = 0; p < a.cols(); ++p) {
            const double aip = a(i, p);
            if (aip == 0.0) continue;
            auto brow = b.row(p);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aip * brow[j];
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw DimensionMismatch("matmul_tn: " + shape(a) + " * " + shape(b));
    Matrix c(a.cols(), b.cols());
    for (std::size_t p = 0; p < a.rows(); ++p) {
        auto arow = a.row(p);
        auto brow = b.row(p);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double api = arow[i];
            if (api == 0.0) continue;
            auto crow = c.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += api * brow[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw DimensionMismatch("matmul_nt: " + shape(a) + " * " + shape(b));
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j) c(i, j) = dot(a.row(i), b.row(j));
    return c;
}

Vector matvec(const Matrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw DimensionMismatch("matvec: " + shape(a) + " * vector " + std::to_string(x.size()));
    Vector y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
    return y;
}

Vector matvec_t(const Matrix& a, std::span<const double> x) {
    if (a.rows() != x.size()) throw DimensionMismatch("matvec_t: " + shape(a) + "ᵀ * vector " + std::to_string(x.size()));
    Vector y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto arow = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) y[j] += arow[j] * x[i];
    }
    return y;
}

Matrix scale_rows(const Matrix& a, std::span<const double> v) {
    if (v.size() != a.rows()) throw DimensionMismatch("scale_rows");
    Matrix out = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (double& x : out.row(i)) x *= v[i];
    return out;
}

Matrix scale_cols(const Matrix& a, std::span<const double> v) {
    if (v.size() != a.cols()) throw DimensionMismatch("scale_cols");
    Matrix out = a;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto r = out.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) r[j] *= v[j];
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double frobenius_norm(const Matrix& a) { return norm2(a.data()); }

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double max_abs(const Matrix& a) { return max_abs(a.data()); }

Vector column_norms(const Matrix& w) {
    if (w.empty()) throw DimensionMismatch("column_norms of empty matrix");
    require_finite(w, "column_norms input");
    Vector sums(w.cols(), 0.0);
    for (std::size_t i = 0; i < w.rows(); ++i) {
        auto r = w.row(i);
        for (std::size_t j = 0; j < w.cols(); ++j) sums[j] += r[j] * r[j];
    }
    for (double& s : sums) s = std::sqrt(s);
    return sums;
}

Vector row_norms(const Matrix& w) {
    if (w.empty()) throw DimensionMismatch("row_norms of empty matrix");
    require_finite(w, "row_norms input");
    Vector out(w.rows());
    for (std::size_t i = 0; i < w.rows(); ++i) out[i] = norm2(w.row(i));
    return out;
}

void require_finite(const Matrix& m, const char* what) {
    if (!m.all_finite()) throw NonFiniteInput(std::string(what) + " contains NaN or Inf");
}

void require_finite(std::span<const double> v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw NonFiniteInput(std::string(what) + " contains NaN or Inf");
}

}  // namespace osora
