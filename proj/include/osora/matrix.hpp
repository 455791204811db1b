// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace osora {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(std::span<const double> diag);
    /// A single column (n x 1).
    static Matrix column(std::span<const double> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    Vector col(std::size_t j) const;
    void set_col(std::size_t j, std::span<const double> values);

    Matrix transpose() const;
    bool all_finite() const;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s);

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

/// Matrix product; throws DimensionMismatch.
Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ·b without materialising the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a·bᵀ without materialising the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, std::span<const double> x);
/// aᵀ·x
Vector matvec_t(const Matrix& a, std::span<const double> x);

/// diag(v)·a
Matrix scale_rows(const Matrix& a, std::span<const double> v);
/// a·diag(v)
Matrix scale_cols(const Matrix& a, std::span<const double> v);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
double max_abs(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);

/// Euclidean norm of each column (length cols). Throws NonFiniteInput.
Vector column_norms(const Matrix& w);
/// Euclidean norm of each row (length rows). Throws NonFiniteInput.
Vector row_norms(const Matrix& w);

/// Throws NonFiniteInput naming `what` if any entry is NaN/Inf.
void require_finite(const Matrix& m, const char* what);
void require_finite(std::span<const double> v, const char* what);

}  // namespace osora
