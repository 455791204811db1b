// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "osora/matrix.hpp"

namespace osora {

/// Thin SVD  w = u · diag(s) · vᵀ  with p = min(rows, cols) triplets.
struct SvdResult {
    Matrix u;  // rows x p, orthonormal columns
    Vector s;  // p, non-increasing, >= 0
    Matrix v;  // cols x p, orthonormal columns
    int sweeps = 0;
};

/// Top-r singular triplets of a weight plus the remainder it leaves behind.
struct SvdFactors {
    Matrix u_r;       // d x r
    Vector s_r;       // r
    Matrix v_r;       // k x r
    Matrix residual;  // w - u_r diag(s_r) v_rᵀ
    std::size_t rank = 0;
};

/// One-sided (Hestenes) Jacobi SVD with cyclic sweeps.
///
/// Columns are rotated pairwise until every pair satisfies
/// |a_p·a_q| <= 1e-14·‖a_p‖‖a_q‖ (max 60 sweeps). Singular values are sorted
/// descending and each left singular vector is signed so its largest-magnitude
/// entry is positive; the matching right vector absorbs the flip. Null-space
/// left vectors of rank-deficient inputs are completed by Gram-Schmidt against
/// the canonical basis so `u` always has orthonormal columns.
///
/// Throws NonFiniteInput, DimensionMismatch (empty input).
SvdResult svd(const Matrix& w);

/// Throws RankOutOfRange unless 1 <= r <= min(d, k); NonFiniteInput.
SvdFactors svd_truncated(const Matrix& w, std::size_t r);

/// u · diag(s) · vᵀ
Matrix reconstruct(const Matrix& u, std::span<const double> s, const Matrix& v);

}  // namespace osora
