// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "osora/digest.hpp"
#include "osora/matrix.hpp"

namespace osora {

enum class MethodTag : std::uint8_t {
    LoRA = 0,
    VeRA = 1,
    PiSSA = 2,
    OSoRA = 3,
    OSoRA_K = 4,
    OSoRA_DoRA = 5,
    DoRA = 6,
};

enum class OInit : std::uint8_t { Ones = 0, Gaussian = 1 };

/// Which OSoRA vectors receive updates.
enum class TrainableSet : std::uint8_t { Both = 0, OnlyS = 1, OnlyO = 2 };

inline constexpr MethodTag kAllMethods[] = {MethodTag::LoRA,  MethodTag::VeRA,       MethodTag::PiSSA,
                                            MethodTag::OSoRA, MethodTag::OSoRA_K,    MethodTag::OSoRA_DoRA,
                                            MethodTag::DoRA};

std::string_view method_name(MethodTag tag);
/// Accepts the canonical lower-case names ("osora_k", "osora_dora", ...), case-insensitively.
MethodTag parse_method(std::string_view name);
std::string_view o_init_name(OInit init);
OInit parse_o_init(std::string_view name);
std::string_view trainable_set_name(TrainableSet set);
TrainableSet parse_trainable_set(std::string_view name);

/// True for methods built on frozen singular vectors with trainable S_r and O.
bool is_osora_family(MethodTag tag);
/// True for methods that rescale the output rows by a trainable magnitude.
bool has_magnitude(MethodTag tag);

struct AdapterMethod {
    MethodTag tag = MethodTag::OSoRA;
    std::size_t rank = 1;
    OInit o_init = OInit::Ones;
    TrainableSet trainable = TrainableSet::Both;

    /// Throws RankOutOfRange / InvalidMethod for settings this method cannot take.
    void validate(std::size_t d, std::size_t k) const;
};

/// One named trainable tensor inside the flat parameter vector.
struct SliceSpec {
    std::string name;
    std::size_t rows;
    std::size_t cols;
    std::size_t offset;
    std::size_t size() const { return rows * cols; }
};

/// Frozen and trainable tensors of one adapted d x k weight (y = W x).
///
/// Which members are populated depends on the method:
///
///   method      frozen                 trainable
///   LoRA        base=W0                lora_a (r x k), lora_b (d x r)
///   PiSSA       base=W0'               lora_a, lora_b
///   VeRA        base=W0, basis_a/b     scale_b (d), scale_d (r)
///   OSoRA       base=W0', u, v         s (r), o (d)
///   OSoRA_K     base=W0', u, v         s (r), o (k)
///   OSoRA_DoRA  base=W0', u, v         s (r), o (d), magnitude (d)
///   DoRA        base=W0                lora_a, lora_b, magnitude (d)
///
/// The magnitude rescales each output row of the effective weight by
/// magnitude_i / ‖row_i‖.
struct AdapterState {
    AdapterMethod method;
    std::size_t d = 0;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    Digest base_digest{};  // of the W0 this adapter was built from

    Matrix base;
    Matrix u;
    Matrix v;
    Matrix basis_a;  // VeRA, r x k
    Matrix basis_b;  // VeRA, d x r

    Matrix lora_a;
    Matrix lora_b;
    Vector s;
    Vector o;
    Vector scale_b;
    Vector scale_d;
    Vector magnitude;
};

/// Constructs an adapter whose forward pass equals W0·x at initialisation.
/// Throws RankOutOfRange, InvalidMethod, NonFiniteInput.
AdapterState build_adapter(const Matrix& w0, const AdapterMethod& method, std::uint64_t seed);

/// The low-rank update ΔW alone (before any magnitude rescaling).
Matrix delta_weight(const AdapterState& state);

/// y = forward(x). Throws DimensionMismatch.
Vector forward(const AdapterState& state, std::span<const double> x);
/// Column-wise forward over a k x n probe matrix, giving d x n.
Matrix forward_batch(const AdapterState& state, const Matrix& x);

/// Single dense weight with merge(state)·x == forward(state, x).
Matrix merge(const AdapterState& state);

/// Ordered layout of the exposed trainable tensors (respects TrainableSet).
std::vector<SliceSpec> trainable_layout(const AdapterState& state);
std::vector<double> trainable_vector(const AdapterState& state);
/// Throws LengthMismatch.
void load_trainable(AdapterState& state, std::span<const double> flat);

/// Adds scale·N(0, 1) noise to every exposed trainable coordinate. Used to
/// move states away from their initialisation in checks.
void perturb_trainables(AdapterState& state, std::uint64_t seed, double scale);

}  // namespace osora
