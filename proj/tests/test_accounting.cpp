// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "osora/accounting.hpp"
#include "osora/errors.hpp"

using namespace osora;

TEST_SUITE("accounting") {

TEST_CASE("count_trainable closed forms") {
    CHECK(count_trainable(MethodTag::LoRA, 4, 4, 2) == 16);
    CHECK(count_trainable(MethodTag::OSoRA, 4096, 4096, 512) == 4608);
    CHECK(count_trainable(MethodTag::OSoRA_K, 1024, 4096, 512) == 4608);
    CHECK(count_trainable(MethodTag::VeRA, 10, 3, 7) == 17);
    CHECK(count_trainable(MethodTag::PiSSA, 10, 3, 2) == 26);
    CHECK(count_trainable(MethodTag::DoRA, 10, 3, 2) == 36);
    CHECK(count_trainable(MethodTag::OSoRA_DoRA, 10, 3, 2) == 22);
    CHECK_THROWS_AS(count_trainable(MethodTag::OSoRA, 4, 3, 4), RankOutOfRange);
    CHECK_NOTHROW(count_trainable(MethodTag::VeRA, 4, 3, 40));
    CHECK(count_trainable(AdapterMethod{MethodTag::OSoRA, 3, OInit::Ones, TrainableSet::OnlyS}, 10, 8) == 3);
    CHECK(count_trainable(AdapterMethod{MethodTag::OSoRA_K, 3, OInit::Ones, TrainableSet::OnlyO}, 10, 8) == 8);
}

TEST_CASE("published totals on the mistral7b_v03 preset") {
    const ShapePreset& p = find_preset(builtin_presets(), "mistral7b_v03");
    CHECK(report(p, MethodTag::OSoRA, 512).total_trainable == 196'608);
    CHECK(report(p, MethodTag::OSoRA_K, 512).total_trainable == 294'912);
    CHECK(report(p, MethodTag::DoRA, 16).total_trainable == 6'979'584);
    CHECK(report(p, MethodTag::OSoRA_DoRA, 512).total_trainable == 360'448);
    const ShapePreset& llama = find_preset(builtin_presets(), "llama3_8b");
    CHECK(report(llama, MethodTag::OSoRA, 512).total_trainable == 196'608);
    CHECK(report(llama, MethodTag::DoRA, 16).total_trainable == 6'979'584);
}

TEST_CASE("report totals are layer-scaled sums of per-target counts") {
    for (const ShapePreset& p : builtin_presets()) {
        for (MethodTag tag : kAllMethods) {
            const ParamReport rep = report(p, tag, 64);
            std::uint64_t sum = 0;
            for (const auto& t : rep.per_target) sum += t.trainable;
            CHECK(rep.total_trainable == p.layers * sum);
        }
    }
}

TEST_CASE("OSoRA memory footprint follows (r + d) + (dr + kr)") {
    CHECK(memory_footprint(MethodTag::OSoRA, 4096, 4096, 512) == 4608 + 2 * 4096 * 512);
    CHECK(memory_footprint(MethodTag::LoRA, 64, 32, 4) == count_trainable(MethodTag::LoRA, 64, 32, 4));
    const ShapePreset& p = find_preset(builtin_presets(), "mistral7b_v03");
    const ParamReport rep = report(p, MethodTag::OSoRA, 512);
    CHECK(rep.memory_footprint == 32 * ((512 + 4096 + 4096 * 512 + 4096 * 512) + (512 + 1024 + 1024 * 512 + 4096 * 512)));
}

TEST_CASE("scaling sweep on qwen2_7b") {
    const ShapePreset& p = find_preset(builtin_presets(), "qwen2_7b");
    const std::vector<std::uint64_t> ranks{64, 128, 256, 512};
    const auto rows = scaling_sweep(p, {MethodTag::OSoRA, MethodTag::LoRA, MethodTag::VeRA}, ranks);
    REQUIRE(rows.size() == 12);
    // Sorted by (method name, rank): lora, osora, vera.
    CHECK(rows[0].method == MethodTag::LoRA);
    CHECK(rows[4].method == MethodTag::OSoRA);
    CHECK(rows[8].method == MethodTag::VeRA);
    const std::uint64_t expected[] = {118'272, 121'856, 129'024, 143'360};
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(rows[4 + i].trainable == expected[i]);
        CHECK(rows[4 + i].trainable == 28 * (2 * ranks[i] + 4096));
    }
    // Constant per-unit-rank increments: 2 targets per layer.
    for (std::size_t i = 1; i < 4; ++i) {
        CHECK(rows[4 + i].trainable - rows[4 + i - 1].trainable == 2 * 28 * (ranks[i] - ranks[i - 1]));
    }
}

TEST_CASE("LoRA slope exceeds OSoRA slope on every preset") {
    for (const ShapePreset& p : builtin_presets()) {
        const auto osora_slope = report(p, MethodTag::OSoRA, 2).total_trainable - report(p, MethodTag::OSoRA, 1).total_trainable;
        const auto lora_slope = report(p, MethodTag::LoRA, 2).total_trainable - report(p, MethodTag::LoRA, 1).total_trainable;
        CHECK(lora_slope > osora_slope);
    }
}

TEST_CASE("param_ratio") {
    for (std::uint64_t d : {3u, 64u, 4096u}) CHECK(param_ratio(d, d, d) == doctest::Approx(1.0 / static_cast<double>(d)).epsilon(1e-15));
    const double ratio = param_ratio(4096, 4096, 512);
    CHECK(ratio == 4608.0 / 4'194'304.0);
    CHECK(ratio == doctest::Approx(1.0986e-3).epsilon(1e-4));
    std::mt19937_64 gen(1);
    std::uniform_int_distribution<std::uint64_t> dim(1, 8192);
    for (int i = 0; i < 100; ++i) {
        const auto d = dim(gen);
        const auto k = dim(gen);
        const auto r = dim(gen);
        const double a = param_ratio(d, k, r);
        const double b = param_ratio_split(d, k, r);
        CHECK(std::abs(a - b) <= 1e-15 * a);
    }
}

TEST_CASE("preset text format") {
    SUBCASE("shipped file equals the built-in copy") {
        std::ifstream in(OSORA_PRESETS_PATH);
        REQUIRE(in);
        std::stringstream ss;
        ss << in.rdbuf();
        CHECK(ss.str() == builtin_preset_text());
        CHECK(load_presets(OSORA_PRESETS_PATH).size() == 3);
    }
    SUBCASE("parse") {
        const auto ps = parse_presets("# c\n[tiny]\nlayers = 2\ntarget = q 8 4  # note\ntarget = v 2 4\n");
        REQUIRE(ps.size() == 1);
        CHECK(ps[0].name == "tiny");
        CHECK(ps[0].layers == 2);
        REQUIRE(ps[0].targets.size() == 2);
        CHECK(ps[0].targets[1].d == 2);
        CHECK(ps[0].targets[1].k == 4);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(parse_presets("layers = 2\n"), ParseError);
        CHECK_THROWS_AS(parse_presets("[a]\nlayers = 2\nheads = 4\ntarget = q 1 1\n"), ParseError);
        CHECK_THROWS_AS(parse_presets("[a]\nlayers = 2\ntarget = q 0 1\n"), ParseError);
        CHECK_THROWS_AS(parse_presets("[a]\nlayers = 2\n"), ParseError);
        CHECK_THROWS_AS(find_preset(builtin_presets(), "gpt2"), UnknownPreset);
    }
}

}  // TEST_SUITE
