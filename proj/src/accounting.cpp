// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "osora/accounting.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <tuple>

#include "osora/errors.hpp"

namespace osora {

namespace detail {
extern const std::string_view kBuiltinPresetText;
}

namespace {

void require_svd_rank(MethodTag tag, std::uint64_t d, std::uint64_t k, std::uint64_t r) {
    if (r == 0) throw RankOutOfRange("rank must be >= 1");
    if ((is_osora_family(tag) || tag == MethodTag::PiSSA) && r > std::min(d, k)) {
        throw RankOutOfRange(std::string(method_name(tag)) + " rank " + std::to_string(r) + " exceeds min(d, k)");
    }
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

std::uint64_t count_trainable(MethodTag tag, std::uint64_t d, std::uint64_t k, std::uint64_t r) {
    if (d == 0 || k == 0) throw DimensionMismatch("dims must be positive");
    require_svd_rank(tag, d, k, r);
    switch (tag) {
        case MethodTag::OSoRA:
        case MethodTag::VeRA: return r + d;
        case MethodTag::OSoRA_K: return r + k;
        case MethodTag::LoRA:
        case MethodTag::PiSSA: return r * (d + k);
        case MethodTag::DoRA: return r * (d + k) + d;
        case MethodTag::OSoRA_DoRA: return r + 2 * d;
    }
    return 0;
}

std::uint64_t count_trainable(const AdapterMethod& method, std::uint64_t d, std::uint64_t k) {
    const std::uint64_t r = method.rank;
    const std::uint64_t full = count_trainable(method.tag, d, k, r);
    switch (method.trainable) {
        case TrainableSet::Both: return full;
        case TrainableSet::OnlyS: return r;
        case TrainableSet::OnlyO: return full - r;
    }
    return full;
}

std::uint64_t memory_footprint(MethodTag tag, std::uint64_t d, std::uint64_t k, std::uint64_t r) {
    const std::uint64_t trainable = count_trainable(tag, d, k, r);
    if (is_osora_family(tag) || tag == MethodTag::VeRA) return trainable + (d * r + k * r);
    return trainable;
}

ParamReport report(const ShapePreset& preset, MethodTag method, std::uint64_t r) {
    ParamReport rep;
    rep.preset = preset.name;
    rep.method = method;
    rep.rank = r;
    std::uint64_t per_layer = 0;
    std::uint64_t per_layer_memory = 0;
    for (const TargetShape& t : preset.targets) {
        TargetCount c{t.name, t.d, t.k, count_trainable(method, t.d, t.k, r), memory_footprint(method, t.d, t.k, r)};
        per_layer += c.trainable;
        per_layer_memory += c.memory;
        rep.per_target.push_back(std::move(c));
    }
    rep.total_trainable = preset.layers * per_layer;
    rep.memory_footprint = preset.layers * per_layer_memory;
    return rep;
}

std::vector<SweepRow> scaling_sweep(const ShapePreset& preset, const std::vector<MethodTag>& methods,
                                    const std::vector<std::uint64_t>& ranks) {
    std::vector<SweepRow> rows;
    for (MethodTag m : methods) {
        for (std::uint64_t r : ranks) {
            const ParamReport rep = report(preset, m, r);
            rows.push_back({m, r, rep.total_trainable, rep.memory_footprint});
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        return std::tuple(method_name(a.method), a.rank) < std::tuple(method_name(b.method), b.rank);
    });
    return rows;
}

double param_ratio(std::uint64_t d, std::uint64_t k, std::uint64_t r) {
    return static_cast<double>(r + d) / static_cast<double>(r * (d + k));
}

double param_ratio_split(std::uint64_t d, std::uint64_t k, std::uint64_t r) {
    const double dk = static_cast<double>(d + k);
    return 1.0 / dk + static_cast<double>(d) / (static_cast<double>(r) * dk);
}

std::vector<ShapePreset> parse_presets(std::string_view text) {
    std::vector<ShapePreset> out;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw ParseError("presets line " + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail("unterminated section header");
            out.push_back({std::string(trim(line.substr(1, line.size() - 2))), 0, {}});
            if (out.back().name.empty()) fail("empty preset name");
            continue;
        }
        if (out.empty()) fail("key outside a [preset] section");
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) fail("expected key = value");
        const std::string_view key = trim(line.substr(0, eq));
        std::istringstream value{std::string(trim(line.substr(eq + 1)))};
        ShapePreset& p = out.back();
        if (key == "layers") {
            long long layers = 0;
            if (!(value >> layers) || layers <= 0) fail("layers must be a positive integer");
            p.layers = static_cast<std::uint64_t>(layers);
        } else if (key == "target") {
            TargetShape t;
            long long d = 0;
            long long k = 0;
            if (!(value >> t.name >> d >> k) || d <= 0 || k <= 0) fail("target needs: name d k (positive dims)");
            t.d = static_cast<std::uint64_t>(d);
            t.k = static_cast<std::uint64_t>(k);
            p.targets.push_back(std::move(t));
        } else {
            fail("unknown key '" + std::string(key) + "'");
        }
        std::string extra;
        if (value >> extra) fail("trailing text '" + extra + "'");
    }
    for (const auto& p : out) {
        if (p.layers == 0 || p.targets.empty()) {
            throw ParseError("preset '" + p.name + "' needs layers and at least one target");
        }
    }
    return out;
}

std::vector<ShapePreset> load_presets(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open presets file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_presets(ss.str());
}

std::string_view builtin_preset_text() { return detail::kBuiltinPresetText; }

const std::vector<ShapePreset>& builtin_presets() {
    static const std::vector<ShapePreset> presets = parse_presets(detail::kBuiltinPresetText);
    return presets;
}

const ShapePreset& find_preset(const std::vector<ShapePreset>& presets, std::string_view name) {
    for (const auto& p : presets)
        if (p.name == name) return p;
    throw UnknownPreset("unknown preset '" + std::string(name) + "'");
}

}  // namespace osora
