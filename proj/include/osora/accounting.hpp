// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "osora/adapter.hpp"

namespace osora {

/// One adapted projection inside a layer (weight is d x k, y = W x).
struct TargetShape {
    std::string name;
    std::uint64_t d = 0;
    std::uint64_t k = 0;
};

struct ShapePreset {
    std::string name;
    std::uint64_t layers = 0;
    std::vector<TargetShape> targets;  // per layer
};

struct TargetCount {
    std::string target;
    std::uint64_t d = 0;
    std::uint64_t k = 0;
    std::uint64_t trainable = 0;  // per layer
    std::uint64_t memory = 0;     // per layer
};

struct ParamReport {
    std::string preset;
    MethodTag method = MethodTag::OSoRA;
    std::uint64_t rank = 0;
    std::vector<TargetCount> per_target;
    std::uint64_t total_trainable = 0;
    std::uint64_t memory_footprint = 0;
};

struct SweepRow {
    MethodTag method;
    std::uint64_t rank;
    std::uint64_t trainable;
    std::uint64_t memory;
};

/// Trainable scalars for one d x k target:
///   OSoRA r+d, OSoRA_K r+k, VeRA r+d, LoRA/PiSSA r(d+k),
///   DoRA r(d+k)+d, OSoRA_DoRA r+2d.
/// TrainableSet restrictions shrink OSoRA/OSoRA_K to r or the O length.
/// Throws RankOutOfRange for SVD-based methods with r > min(d, k).
std::uint64_t count_trainable(const AdapterMethod& method, std::uint64_t d, std::uint64_t k);
std::uint64_t count_trainable(MethodTag tag, std::uint64_t d, std::uint64_t k, std::uint64_t r);

/// Trainable plus the frozen adapter-side tensors that must stay resident
/// during training (excluding W0 itself): U_r and V_r (dr + kr) for the
/// OSoRA family, the random bases for VeRA, nothing extra for LoRA-style.
std::uint64_t memory_footprint(MethodTag tag, std::uint64_t d, std::uint64_t k, std::uint64_t r);

ParamReport report(const ShapePreset& preset, MethodTag method, std::uint64_t r);

/// Rows sorted by (method name, rank).
std::vector<SweepRow> scaling_sweep(const ShapePreset& preset, const std::vector<MethodTag>& methods,
                                    const std::vector<std::uint64_t>& ranks);

/// (r + d) / (r (d + k))
double param_ratio(std::uint64_t d, std::uint64_t k, std::uint64_t r);
/// 1/(d + k) + d/(r (d + k)), the split form of param_ratio.
double param_ratio_split(std::uint64_t d, std::uint64_t k, std::uint64_t r);

/// Parses the preset text format:
///
///   # comment
///   [preset_name]
///   layers = 32
///   target = q 4096 4096      # name d k
///
/// Throws ParseError.
std::vector<ShapePreset> parse_presets(std::string_view text);
std::vector<ShapePreset> load_presets(const std::string& path);

/// Built-in copy of data/presets.txt.
std::string_view builtin_preset_text();
const std::vector<ShapePreset>& builtin_presets();

/// Throws UnknownPreset.
const ShapePreset& find_preset(const std::vector<ShapePreset>& presets, std::string_view name);

}  // namespace osora
