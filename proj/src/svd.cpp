// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "osora/svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "osora/errors.hpp"

namespace osora {

namespace {

constexpr double kOrthTol = 1e-14;
constexpr int kMaxSweeps = 60;

// Column-major scratch so that column rotations touch contiguous memory.
struct ColumnSet {
    std::size_t len;
    std::size_t count;
    std::vector<double> data;

    double* col(std::size_t j) { return data.data() + j * len; }
    const double* col(std::size_t j) const { return data.data() + j * len; }
};

ColumnSet columns_of(const Matrix& a) {
    ColumnSet cs{a.rows(), a.cols(), std::vector<double>(a.size())};
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) cs.data[j * a.rows() + i] = a(i, j);
    return cs;
}

double col_dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

// Adds canonical basis vectors, orthogonalised against columns already in
// `basis`, until `basis` holds `want` orthonormal columns.
void complete_basis(ColumnSet& basis, std::vector<bool>& filled) {
    const std::size_t n = basis.len;
    std::size_t candidate = 0;
    for (std::size_t j = 0; j < basis.count; ++j) {
        if (filled[j]) continue;
        while (candidate < n) {
            std::vector<double> e(n, 0.0);
            e[candidate++] = 1.0;
            // Two passes of modified Gram-Schmidt.
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t q = 0; q < basis.count; ++q) {
                    if (!filled[q]) continue;
                    const double proj = col_dot(basis.col(q), e.data(), n);
                    for (std::size_t i = 0; i < n; ++i) e[i] -= proj * basis.col(q)[i];
                }
            }
            const double nrm = std::sqrt(col_dot(e.data(), e.data(), n));
            if (nrm > 1e-6) {
                for (std::size_t i = 0; i < n; ++i) basis.col(j)[i] = e[i] / nrm;
                filled[j] = true;
                break;
            }
        }
    }
}

// Jacobi SVD for a tall (or square) matrix, rows >= cols.
SvdResult svd_tall(const Matrix& w) {
    const std::size_t m = w.rows();
    const std::size_t n = w.cols();
    ColumnSet a = columns_of(w);
    ColumnSet v{n, n, std::vector<double>(n * n, 0.0)};
    for (std::size_t j = 0; j < n; ++j) v.col(j)[j] = 1.0;

    int sweeps = 0;
    bool rotated = true;
    while (rotated && sweeps < kMaxSweeps) {
        rotated = false;
        ++sweeps;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double* ap = a.col(p);
                double* aq = a.col(q);
                const double alpha = col_dot(ap, ap, m);
                const double beta = col_dot(aq, aq, m);
                const double gamma = col_dot(ap, aq, m);
                if (alpha == 0.0 || beta == 0.0) continue;
                if (std::abs(gamma) <= kOrthTol * std::sqrt(alpha) * std::sqrt(beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double x = ap[i];
                    const double y = aq[i];
                    ap[i] = c * x - s * y;
                    aq[i] = s * x + c * y;
                }
                double* vp = v.col(p);
                double* vq = v.col(q);
                for (std::size_t i = 0; i < n; ++i) {
                    const double x = vp[i];
                    const double y = vq[i];
                    vp[i] = c * x - s * y;
                    vq[i] = s * x + c * y;
                }
            }
        }
    }

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(col_dot(a.col(j), a.col(j), m));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    const double sigma_max = n == 0 ? 0.0 : sigma[order[0]];
    const double null_tol =
        sigma_max * static_cast<double>(std::max(m, n)) * std::numeric_limits<double>::epsilon();

    ColumnSet u{m, n, std::vector<double>(m * n, 0.0)};
    std::vector<bool> filled(n, false);
    SvdResult out;
    out.s.resize(n);
    out.v = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        const double sj = sigma[src];
        if (sj > null_tol && sj > 0.0) {
            out.s[j] = sj;
            for (std::size_t i = 0; i < m; ++i) u.col(j)[i] = a.col(src)[i] / sj;
            filled[j] = true;
        } else {
            out.s[j] = 0.0;
        }
        for (std::size_t i = 0; i < n; ++i) out.v(i, j) = v.col(src)[i];
    }
    complete_basis(u, filled);

    out.u = Matrix(m, n);
    for (std::size_t j = 0; j < n; ++j) {
        const double* uj = u.col(j);
        std::size_t arg = 0;
        for (std::size_t i = 1; i < m; ++i)
            if (std::abs(uj[i]) > std::abs(uj[arg])) arg = i;
        const double sign = uj[arg] < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < m; ++i) out.u(i, j) = sign * uj[i];
        if (sign < 0.0)
            for (std::size_t i = 0; i < n; ++i) out.v(i, j) = -out.v(i, j);
    }
    out.sweeps = sweeps;
    return out;
}

// Re-signs a wide-case result so the left vectors follow the same convention.
void apply_sign_convention(SvdResult& r) {
    for (std::size_t j = 0; j < r.u.cols(); ++j) {
        std::size_t arg = 0;
        for (std::size_t i = 1; i < r.u.rows(); ++i)
            if (std::abs(r.u(i, j)) > std::abs(r.u(arg, j))) arg = i;
        if (r.u(arg, j) < 0.0) {
            for (std::size_t i = 0; i < r.u.rows(); ++i) r.u(i, j) = -r.u(i, j);
            for (std::size_t i = 0; i < r.v.rows(); ++i) r.v(i, j) = -r.v(i, j);
        }
    }
}

}  // namespace

SvdResult svd(const Matrix& w) {
    if (w.empty()) throw DimensionMismatch("svd of empty matrix");
    require_finite(w, "svd input");
    if (w.rows() >= w.cols()) return svd_tall(w);
    // Wide: decompose the transpose and swap the roles of u and v.
    SvdResult t = svd_tall(w.transpose());
    SvdResult out;
    out.u = std::move(t.v);
    out.v = std::move(t.u);
    out.s = std::move(t.s);
    out.sweeps = t.sweeps;
    apply_sign_convention(out);
    return out;
}

SvdFactors svd_truncated(const Matrix& w, std::size_t r) {
    const std::size_t p = std::min(w.rows(), w.cols());
    if (r == 0 || r > p) {
        throw RankOutOfRange("rank " + std::to_string(r) + " outside [1, " + std::to_string(p) + "]");
    }
    const SvdResult full = svd(w);
    SvdFactors f;
    f.rank = r;
    f.u_r = Matrix(w.rows(), r);
    f.v_r = Matrix(w.cols(), r);
    f.s_r.assign(full.s.begin(), full.s.begin() + static_cast<std::ptrdiff_t>(r));
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < r; ++j) f.u_r(i, j) = full.u(i, j);
    for (std::size_t i = 0; i < w.cols(); ++i)
        for (std::size_t j = 0; j < r; ++j) f.v_r(i, j) = full.v(i, j);
    f.residual = w - reconstruct(f.u_r, f.s_r, f.v_r);
    return f;
}

Matrix reconstruct(const Matrix& u, std::span<const double> s, const Matrix& v) {
    if (u.cols() != s.size() || v.cols() != s.size()) throw DimensionMismatch("reconstruct");
    return matmul_nt(scale_cols(u, s), v);
}

}  // namespace osora
