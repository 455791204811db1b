// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "osora/adapter.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <type_traits>

#include "osora/errors.hpp"
#include "osora/random.hpp"
#include "osora/svd.hpp"

namespace osora {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

// Sub-stream ids for seeded tensors.
enum Stream : std::uint64_t { kStreamA = 0, kStreamB = 1, kStreamO = 2 };

// magnitude_i / ‖row_i(w)‖, with zero rows mapped to zero.
Vector magnitude_scale(const Vector& magnitude, const Matrix& effective) {
    Vector scale = row_norms(effective);
    for (std::size_t i = 0; i < scale.size(); ++i) scale[i] = scale[i] == 0.0 ? 0.0 : magnitude[i] / scale[i];
    return scale;
}

void copy_into(std::span<double> dst, std::span<const double> src) { std::copy(src.begin(), src.end(), dst.begin()); }

}  // namespace

std::string_view method_name(MethodTag tag) {
    switch (tag) {
        case MethodTag::LoRA: return "lora";
        case MethodTag::VeRA: return "vera";
        case MethodTag::PiSSA: return "pissa";
        case MethodTag::OSoRA: return "osora";
        case MethodTag::OSoRA_K: return "osora_k";
        case MethodTag::OSoRA_DoRA: return "osora_dora";
        case MethodTag::DoRA: return "dora";
    }
    return "unknown";
}

MethodTag parse_method(std::string_view name) {
    const std::string n = lower(name);
    for (MethodTag tag : kAllMethods)
        if (method_name(tag) == n) return tag;
    if (n == "osora+dora") return MethodTag::OSoRA_DoRA;
    throw InvalidMethod("unknown method '" + std::string(name) + "'");
}

std::string_view o_init_name(OInit init) { return init == OInit::Ones ? "ones" : "gaussian"; }

OInit parse_o_init(std::string_view name) {
    const std::string n = lower(name);
    if (n == "ones") return OInit::Ones;
    if (n == "gaussian") return OInit::Gaussian;
    throw InvalidMethod("unknown o-init '" + std::string(name) + "'");
}

std::string_view trainable_set_name(TrainableSet set) {
    switch (set) {
        case TrainableSet::Both: return "both";
        case TrainableSet::OnlyS: return "only_s";
        case TrainableSet::OnlyO: return "only_o";
    }
    return "unknown";
}

TrainableSet parse_trainable_set(std::string_view name) {
    const std::string n = lower(name);
    for (TrainableSet s : {TrainableSet::Both, TrainableSet::OnlyS, TrainableSet::OnlyO})
        if (trainable_set_name(s) == n) return s;
    throw InvalidMethod("unknown trainable set '" + std::string(name) + "'");
}

bool is_osora_family(MethodTag tag) {
    return tag == MethodTag::OSoRA || tag == MethodTag::OSoRA_K || tag == MethodTag::OSoRA_DoRA;
}

bool has_magnitude(MethodTag tag) { return tag == MethodTag::DoRA || tag == MethodTag::OSoRA_DoRA; }

void AdapterMethod::validate(std::size_t d, std::size_t k) const {
    if (rank == 0) throw RankOutOfRange("rank must be >= 1");
    const bool needs_svd = is_osora_family(tag) || tag == MethodTag::PiSSA;
    if (needs_svd && rank > std::min(d, k)) {
        throw RankOutOfRange(std::string(method_name(tag)) + " rank " + std::to_string(rank) + " exceeds min(d, k) = " +
                             std::to_string(std::min(d, k)));
    }
    if (o_init != OInit::Ones && !is_osora_family(tag)) {
        throw InvalidMethod("o-init only applies to the OSoRA family");
    }
    if (trainable != TrainableSet::Both && tag != MethodTag::OSoRA && tag != MethodTag::OSoRA_K) {
        throw InvalidMethod("trainable-set restriction only applies to osora and osora_k");
    }
}

AdapterState build_adapter(const Matrix& w0, const AdapterMethod& method, std::uint64_t seed) {
    if (w0.empty()) throw DimensionMismatch("build_adapter: empty base weight");
    require_finite(w0, "base weight");
    method.validate(w0.rows(), w0.cols());

    AdapterState st;
    st.method = method;
    st.d = w0.rows();
    st.k = w0.cols();
    st.seed = seed;
    st.base_digest = weight_digest(w0);
    const std::size_t r = method.rank;

    switch (method.tag) {
        case MethodTag::LoRA:
        case MethodTag::DoRA:
            st.base = w0;
            st.lora_a = random_matrix(r, st.k, derive_seed(seed, kStreamA), RandomScheme::UniformScaled);
            st.lora_b = Matrix(st.d, r);
            break;
        case MethodTag::VeRA:
            st.base = w0;
            st.basis_a = random_matrix(r, st.k, derive_seed(seed, kStreamA), RandomScheme::UniformScaled);
            st.basis_b = random_matrix(st.d, r, derive_seed(seed, kStreamB), RandomScheme::UniformScaled);
            st.scale_b.assign(st.d, 0.0);
            st.scale_d.assign(r, 0.1);
            break;
        case MethodTag::PiSSA: {
            SvdFactors f = svd_truncated(w0, r);
            Vector root(r);
            for (std::size_t j = 0; j < r; ++j) root[j] = std::sqrt(f.s_r[j]);
            st.lora_b = scale_cols(f.u_r, root);
            st.lora_a = scale_cols(f.v_r, root).transpose();
            st.base = w0 - matmul(st.lora_b, st.lora_a);
            break;
        }
        case MethodTag::OSoRA:
        case MethodTag::OSoRA_K:
        case MethodTag::OSoRA_DoRA: {
            SvdFactors f = svd_truncated(w0, r);
            st.u = std::move(f.u_r);
            st.v = std::move(f.v_r);
            st.s = std::move(f.s_r);
            const std::size_t o_len = method.tag == MethodTag::OSoRA_K ? st.k : st.d;
            if (method.o_init == OInit::Ones) {
                st.o.assign(o_len, 1.0);
            } else {
                const Matrix g = random_matrix(o_len, 1, derive_seed(seed, kStreamO), RandomScheme::Gaussian);
                st.o.assign(g.data().begin(), g.data().end());
            }
            // W0' uses the initial O and S_r and stays frozen from here on.
            if (method.o_init == OInit::Ones) {
                st.base = std::move(f.residual);
            } else {
                st.base = w0 - delta_weight(st);
            }
            break;
        }
    }
    if (has_magnitude(method.tag)) st.magnitude = row_norms(w0);
    return st;
}

Matrix delta_weight(const AdapterState& st) {
    switch (st.method.tag) {
        case MethodTag::LoRA:
        case MethodTag::PiSSA:
        case MethodTag::DoRA:
            return matmul(st.lora_b, st.lora_a);
        case MethodTag::VeRA:
            return scale_rows(matmul(scale_cols(st.basis_b, st.scale_d), st.basis_a), st.scale_b);
        case MethodTag::OSoRA:
        case MethodTag::OSoRA_DoRA:
            return scale_rows(reconstruct(st.u, st.s, st.v), st.o);
        case MethodTag::OSoRA_K:
            return scale_cols(reconstruct(st.u, st.s, st.v), st.o);
    }
    return {};
}

Vector forward(const AdapterState& st, std::span<const double> x) {
    if (x.size() != st.k) {
        throw DimensionMismatch("forward: input length " + std::to_string(x.size()) + ", expected " +
                                std::to_string(st.k));
    }
    if (has_magnitude(st.method.tag)) {
        const Matrix effective = st.base + delta_weight(st);
        Vector y = matvec(effective, x);
        const Vector scale = magnitude_scale(st.magnitude, effective);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] *= scale[i];
        return y;
    }

    Vector y = matvec(st.base, x);
    Vector update;
    switch (st.method.tag) {
        case MethodTag::LoRA:
        case MethodTag::PiSSA:
            update = matvec(st.lora_b, matvec(st.lora_a, x));
            break;
        case MethodTag::VeRA: {
            Vector h = matvec(st.basis_a, x);
            for (std::size_t j = 0; j < h.size(); ++j) h[j] *= st.scale_d[j];
            update = matvec(st.basis_b, h);
            for (std::size_t i = 0; i < update.size(); ++i) update[i] *= st.scale_b[i];
            break;
        }
        case MethodTag::OSoRA: {
            Vector h = matvec_t(st.v, x);
            for (std::size_t j = 0; j < h.size(); ++j) h[j] *= st.s[j];
            update = matvec(st.u, h);
            for (std::size_t i = 0; i < update.size(); ++i) update[i] *= st.o[i];
            break;
        }
        case MethodTag::OSoRA_K: {
            Vector xs(x.begin(), x.end());
            for (std::size_t j = 0; j < xs.size(); ++j) xs[j] *= st.o[j];
            Vector h = matvec_t(st.v, xs);
            for (std::size_t j = 0; j < h.size(); ++j) h[j] *= st.s[j];
            update = matvec(st.u, h);
            break;
        }
        default:
            break;
    }
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += update[i];
    return y;
}

Matrix forward_batch(const AdapterState& st, const Matrix& x) {
    if (x.rows() != st.k) throw DimensionMismatch("forward_batch: probe rows must equal k");
    if (has_magnitude(st.method.tag)) return matmul(merge(st), x);
    Matrix out(st.d, x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) out.set_col(j, forward(st, x.col(j)));
    return out;
}

Matrix merge(const AdapterState& st) {
    Matrix w = st.base + delta_weight(st);
    if (has_magnitude(st.method.tag)) w = scale_rows(w, magnitude_scale(st.magnitude, w));
    return w;
}

std::vector<SliceSpec> trainable_layout(const AdapterState& st) {
    std::vector<SliceSpec> out;
    std::size_t offset = 0;
    auto add = [&](const char* name, std::size_t rows, std::size_t cols) {
        out.push_back({name, rows, cols, offset});
        offset += rows * cols;
    };
    const std::size_t r = st.method.rank;
    switch (st.method.tag) {
        case MethodTag::LoRA:
        case MethodTag::PiSSA:
            add("A", r, st.k);
            add("B", st.d, r);
            break;
        case MethodTag::DoRA:
            add("A", r, st.k);
            add("B", st.d, r);
            add("m", st.d, 1);
            break;
        case MethodTag::VeRA:
            add("b", st.d, 1);
            add("d", r, 1);
            break;
        case MethodTag::OSoRA:
        case MethodTag::OSoRA_K: {
            const std::size_t o_len = st.method.tag == MethodTag::OSoRA_K ? st.k : st.d;
            if (st.method.trainable != TrainableSet::OnlyO) add("S", r, 1);
            if (st.method.trainable != TrainableSet::OnlyS) add("O", o_len, 1);
            break;
        }
        case MethodTag::OSoRA_DoRA:
            add("S", r, 1);
            add("O", st.d, 1);
            add("m", st.d, 1);
            break;
    }
    return out;
}

namespace {

// Storage backing each named slice.
template <typename State>
auto slice_storage(State& st, const std::string& name)
    -> std::span<std::conditional_t<std::is_const_v<State>, const double, double>> {
    if (name == "A") return st.lora_a.data();
    if (name == "B") return st.lora_b.data();
    if (name == "m") return st.magnitude;
    if (name == "b") return st.scale_b;
    if (name == "d") return st.scale_d;
    if (name == "S") return st.s;
    if (name == "O") return st.o;
    throw InvalidMethod("no trainable slice named " + name);
}

}  // namespace

std::vector<double> trainable_vector(const AdapterState& state) {
    std::vector<double> flat;
    for (const SliceSpec& spec : trainable_layout(state)) {
        auto src = slice_storage(state, spec.name);
        flat.insert(flat.end(), src.begin(), src.end());
    }
    return flat;
}

void load_trainable(AdapterState& st, std::span<const double> flat) {
    const auto layout = trainable_layout(st);
    const std::size_t total = layout.empty() ? 0 : layout.back().offset + layout.back().size();
    if (flat.size() != total) {
        throw LengthMismatch("trainable vector length " + std::to_string(flat.size()) + ", expected " +
                             std::to_string(total));
    }
    for (const SliceSpec& spec : layout) copy_into(slice_storage(st, spec.name), flat.subspan(spec.offset, spec.size()));
}

void perturb_trainables(AdapterState& st, std::uint64_t seed, double scale) {
    Vector theta = trainable_vector(st);
    if (theta.empty()) return;
    const Matrix noise = random_matrix(theta.size(), 1, seed, RandomScheme::Gaussian);
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += scale * noise(i, 0);
    load_trainable(st, theta);
}

}  // namespace osora
