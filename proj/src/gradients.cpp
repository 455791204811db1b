// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "osora/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "osora/errors.hpp"
#include "osora/svd.hpp"

namespace osora {

namespace {

void check_probes(const AdapterState& st, const Matrix& x, const Matrix& y) {
    if (x.rows() != st.k || y.rows() != st.d || x.cols() != y.cols() || x.cols() == 0) {
        throw DimensionMismatch("probes must be k x n and targets d x n with matching n >= 1");
    }
}

Matrix prediction_error(const AdapterState& st, const Matrix& x, const Matrix& y) {
    return forward_batch(st, x) - y;
}

struct ChainedGradient {
    Matrix delta;     // ∂L/∂ΔW
    Vector magnitude; // ∂L/∂m, magnitude methods only
};

// Pulls ∂L/∂W_final back through the row rescaling m_i / ‖row_i(W)‖.
ChainedGradient through_magnitude(const AdapterState& st, const Matrix& g_final) {
    if (!has_magnitude(st.method.tag)) return {g_final, {}};
    const Matrix w = st.base + delta_weight(st);
    const Vector norms = row_norms(w);
    ChainedGradient out{Matrix(st.d, st.k), Vector(st.d, 0.0)};
    for (std::size_t i = 0; i < st.d; ++i) {
        const double nu = norms[i];
        if (nu == 0.0) continue;
        const double c = dot(g_final.row(i), w.row(i));
        out.magnitude[i] = c / nu;
        const double scale = st.magnitude[i] / nu;
        const double proj = c / (nu * nu);
        auto gr = out.delta.row(i);
        auto gf = g_final.row(i);
        auto wr = w.row(i);
        for (std::size_t j = 0; j < st.k; ++j) gr[j] = scale * (gf[j] - proj * wr[j]);
    }
    return out;
}

GradSlice make_slice(const SliceSpec& spec, Vector values) {
    return {spec.name, spec.rows, spec.cols, std::move(values)};
}

LossGrad assemble(const AdapterState& st, double loss, auto&& value_for) {
    LossGrad g;
    g.loss = loss;
    for (const SliceSpec& spec : trainable_layout(st)) g.slices.push_back(make_slice(spec, value_for(spec.name)));
    return g;
}

Vector to_vector(const Matrix& m) { return {m.data().begin(), m.data().end()}; }

}  // namespace

Vector LossGrad::flat() const {
    Vector out;
    for (const auto& s : slices) out.insert(out.end(), s.values.begin(), s.values.end());
    return out;
}

const GradSlice& LossGrad::slice(std::string_view name) const {
    for (const auto& s : slices)
        if (s.name == name) return s;
    throw std::out_of_range("no gradient slice named " + std::string(name));
}

double loss_mse(const AdapterState& st, const Matrix& x, const Matrix& y) {
    check_probes(st, x, y);
    const Matrix e = prediction_error(st, x, y);
    const double sq = dot(e.data(), e.data());
    return sq / (2.0 * static_cast<double>(x.cols()));
}

Matrix loss_weight_gradient(const AdapterState& st, const Matrix& x, const Matrix& y) {
    check_probes(st, x, y);
    Matrix g = matmul_nt(prediction_error(st, x, y), x);
    g *= 1.0 / static_cast<double>(x.cols());
    return g;
}

LossGrad grad_osora(const AdapterState& st, const Matrix& x, const Matrix& y) {
    if (!is_osora_family(st.method.tag)) {
        throw MethodMismatch("grad_osora called on " + std::string(method_name(st.method.tag)));
    }
    const double loss = loss_mse(st, x, y);
    const ChainedGradient chained = through_magnitude(st, loss_weight_gradient(st, x, y));
    const Matrix& g = chained.delta;
    const std::size_t r = st.method.rank;

    Vector grad_s(r);
    Vector grad_o(st.o.size(), 0.0);
    if (st.method.tag == MethodTag::OSoRA_K) {
        // diag(U_rᵀ G Λ_O V_r)
        const Matrix m = matmul(matmul_tn(st.u, g), scale_rows(st.v, st.o));
        for (std::size_t l = 0; l < r; ++l) grad_s[l] = m(l, l);
        // diag(Gᵀ U_r Λ_S V_rᵀ)
        const Matrix gtu = matmul_tn(g, st.u);
        for (std::size_t j = 0; j < st.k; ++j)
            for (std::size_t l = 0; l < r; ++l) grad_o[j] += gtu(j, l) * st.s[l] * st.v(j, l);
    } else {
        // diag(U_rᵀ Λ_O G V_r)
        const Matrix gv = matmul(g, st.v);
        const Matrix m = matmul_tn(scale_rows(st.u, st.o), gv);
        for (std::size_t l = 0; l < r; ++l) grad_s[l] = m(l, l);
        // diag(G V_r Λ_S U_rᵀ)
        for (std::size_t i = 0; i < st.d; ++i)
            for (std::size_t l = 0; l < r; ++l) grad_o[i] += gv(i, l) * st.s[l] * st.u(i, l);
    }

    return assemble(st, loss, [&](const std::string& name) -> Vector {
        if (name == "S") return grad_s;
        if (name == "O") return grad_o;
        return chained.magnitude;
    });
}

LossGrad grad_generic(const AdapterState& st, const Matrix& x, const Matrix& y) {
    if (is_osora_family(st.method.tag)) {
        throw MethodMismatch("grad_generic called on " + std::string(method_name(st.method.tag)));
    }
    const double loss = loss_mse(st, x, y);
    const ChainedGradient chained = through_magnitude(st, loss_weight_gradient(st, x, y));
    const Matrix& g = chained.delta;

    if (st.method.tag == MethodTag::VeRA) {
        // ΔW = Λ_b B Λ_d A
        const Matrix bda = matmul(scale_cols(st.basis_b, st.scale_d), st.basis_a);
        Vector grad_b(st.d, 0.0);
        for (std::size_t i = 0; i < st.d; ++i) grad_b[i] = dot(g.row(i), bda.row(i));
        const Matrix gat = matmul_nt(g, st.basis_a);  // d x r
        Vector grad_d(st.method.rank, 0.0);
        for (std::size_t i = 0; i < st.d; ++i)
            for (std::size_t l = 0; l < st.method.rank; ++l) grad_d[l] += st.scale_b[i] * st.basis_b(i, l) * gat(i, l);
        return assemble(st, loss, [&](const std::string& name) { return name == "b" ? grad_b : grad_d; });
    }

    // ΔW = B A
    const Matrix grad_a = matmul_tn(st.lora_b, g);
    const Matrix grad_b = matmul_nt(g, st.lora_a);
    return assemble(st, loss, [&](const std::string& name) -> Vector {
        if (name == "A") return to_vector(grad_a);
        if (name == "B") return to_vector(grad_b);
        return chained.magnitude;
    });
}

LossGrad gradient(const AdapterState& st, const Matrix& x, const Matrix& y) {
    return is_osora_family(st.method.tag) ? grad_osora(st, x, y) : grad_generic(st, x, y);
}

LossGrad finite_diff(const AdapterState& st, const Matrix& x, const Matrix& y, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff step must be positive");
    AdapterState probe = st;
    const Vector theta = trainable_vector(st);
    Vector values(theta.size());
    Vector shifted = theta;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        shifted[i] = theta[i] + h;
        load_trainable(probe, shifted);
        const double up = loss_mse(probe, x, y);
        shifted[i] = theta[i] - h;
        load_trainable(probe, shifted);
        const double down = loss_mse(probe, x, y);
        shifted[i] = theta[i];
        values[i] = (up - down) / (2.0 * h);
    }
    LossGrad g;
    g.loss = loss_mse(st, x, y);
    for (const SliceSpec& spec : trainable_layout(st)) {
        auto first = values.begin() + static_cast<std::ptrdiff_t>(spec.offset);
        g.slices.push_back({spec.name, spec.rows, spec.cols, Vector(first, first + static_cast<std::ptrdiff_t>(spec.size()))});
    }
    return g;
}

double relative_grad_error(const LossGrad& analytic, const LossGrad& reference) {
    const Vector a = analytic.flat();
    const Vector b = reference.flat();
    if (a.size() != b.size()) throw LengthMismatch("gradient lengths differ");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst / (1.0 + max_abs(a));
}

}  // namespace osora
