// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "osora/adapter.hpp"
#include "osora/matrix.hpp"

namespace osora {

struct GradSlice {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vector values;  // row-major, rows * cols
};

/// Loss value plus one gradient slice per exposed trainable tensor, in
/// trainable_layout() order.
struct LossGrad {
    double loss = 0.0;
    std::vector<GradSlice> slices;

    Vector flat() const;
    /// Throws std::out_of_range for a slice the method does not expose.
    const GradSlice& slice(std::string_view name) const;
};

/// (1 / 2n) Σ_i ‖forward(x_i) − y_i‖² over the n columns of x (k x n) and y (d x n).
/// Throws DimensionMismatch.
double loss_mse(const AdapterState& state, const Matrix& x, const Matrix& y);

/// ∂L/∂ΔW for the MSE loss, i.e. (1/n)(pred − y)xᵀ, before any magnitude chain rule.
Matrix loss_weight_gradient(const AdapterState& state, const Matrix& x, const Matrix& y);

/// Analytic gradient for OSoRA, OSoRA_K and OSoRA_DoRA. With G = ∂L/∂ΔW:
///   ∂L/∂S_r = diag(U_rᵀ Λ_O G V_r)
///   ∂L/∂O   = diag(G V_r Λ_S U_rᵀ)      (OSoRA, O over outputs)
/// OSoRA_K places O on the input side: ∂L/∂S_r = diag(U_rᵀ G Λ_O V_r) and
/// ∂L/∂O = diag(Gᵀ U_r Λ_S V_rᵀ). Throws MethodMismatch for other methods.
LossGrad grad_osora(const AdapterState& state, const Matrix& x, const Matrix& y);

/// Analytic gradient for LoRA, PiSSA, VeRA and DoRA. Throws MethodMismatch.
LossGrad grad_generic(const AdapterState& state, const Matrix& x, const Matrix& y);

/// Dispatches to grad_osora or grad_generic.
LossGrad gradient(const AdapterState& state, const Matrix& x, const Matrix& y);

/// Central differences over the trainable_vector coordinates.
LossGrad finite_diff(const AdapterState& state, const Matrix& x, const Matrix& y, double h = 1e-6);

/// max_i |a_i − b_i| / (1 + ‖a‖∞) over the flattened gradients.
double relative_grad_error(const LossGrad& analytic, const LossGrad& reference);

}  // namespace osora
