// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "osora/accounting.hpp"
#include "osora/adapter.hpp"
#include "osora/errors.hpp"
#include "osora/persist.hpp"
#include "osora/random.hpp"

using namespace osora;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("osora-persist-test-" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<AdapterMethod> variants() {
    std::vector<AdapterMethod> out;
    for (MethodTag tag : kAllMethods) out.push_back({tag, 3});
    out.push_back({MethodTag::OSoRA, 3, OInit::Gaussian, TrainableSet::OnlyS});
    out.push_back({MethodTag::OSoRA_K, 3, OInit::Gaussian, TrainableSet::OnlyO});
    return out;
}

// An OSoRA state with only the trainable vectors populated (enough for save()).
AdapterState bare_osora(std::size_t d, std::size_t k, std::size_t r) {
    AdapterState st;
    st.method = {MethodTag::OSoRA, r};
    st.d = d;
    st.k = k;
    st.s.assign(r, 1.0);
    st.o.assign(d, 1.0);
    return st;
}

std::uint64_t le64(const std::vector<std::uint8_t>& b, std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[at + i]) << (8 * i);
    return v;
}

}  // namespace

TEST_SUITE("persist") {

TEST_CASE("save/load reproduces forward bitwise and frozen tensors exactly") {
    TempDir tmp;
    const Matrix w0 = random_matrix(11, 9, 1, RandomScheme::Gaussian);
    const Matrix probes = random_matrix(9, 20, 2, RandomScheme::Gaussian);
    std::uint64_t seed = 0;
    for (const AdapterMethod& m : variants()) {
        CAPTURE(method_name(m.tag));
        AdapterState st = build_adapter(w0, m, ++seed);
        perturb_trainables(st, 50 + seed, 0.4);
        const std::string path = tmp.file("a.osra");
        save(st, path);
        CHECK(fs::file_size(path) == kHeaderBytes + 8 * count_trainable(m, 11, 9));
        const AdapterState back = load(path, w0);
        for (std::size_t j = 0; j < probes.cols(); ++j) CHECK(forward(back, probes.col(j)) == forward(st, probes.col(j)));
        CHECK(merge(back) == merge(st));
        CHECK(back.base == st.base);
        CHECK(back.u == st.u);
        CHECK(back.v == st.v);
        CHECK(back.basis_a == st.basis_a);
        CHECK(back.basis_b == st.basis_b);
        CHECK(back.o == st.o);
        CHECK(back.s == st.s);
    }
}

TEST_CASE("OSoRA payload size depends on r + d only") {
    TempDir tmp;
    save(bare_osora(4096, 4096, 512), tmp.file("big.osra"));
    CHECK(fs::file_size(tmp.file("big.osra")) - kHeaderBytes == 8 * 4608);
    save(bare_osora(4096, 11008, 512), tmp.file("wide.osra"));
    CHECK(fs::file_size(tmp.file("wide.osra")) == fs::file_size(tmp.file("big.osra")));
}

TEST_CASE("storage ratio against LoRA equals param_ratio") {
    TempDir tmp;
    const Matrix w0 = random_matrix(12, 8, 3, RandomScheme::Gaussian);
    for (std::size_t r : {1u, 2u, 5u}) {
        save(build_adapter(w0, {MethodTag::OSoRA, r}, 0), tmp.file("o.osra"));
        save(build_adapter(w0, {MethodTag::LoRA, r}, 0), tmp.file("l.osra"));
        const double osora_bytes = static_cast<double>(fs::file_size(tmp.file("o.osra")) - kHeaderBytes);
        const double lora_bytes = static_cast<double>(fs::file_size(tmp.file("l.osra")) - kHeaderBytes);
        CHECK(osora_bytes / lora_bytes == param_ratio(12, 8, r));
    }
}

TEST_CASE("header layout is bit-exact") {
    TempDir tmp;
    const Matrix w0 = random_matrix(5, 4, 4, RandomScheme::Gaussian);
    AdapterState st = build_adapter(w0, {MethodTag::OSoRA_K, 2, OInit::Gaussian, TrainableSet::OnlyO}, 0xABCDEF);
    save(st, tmp.file("h.osra"));
    const auto b = read_bytes(tmp.file("h.osra"));
    REQUIRE(b.size() == kHeaderBytes + 8 * 4);
    CHECK(std::memcmp(b.data(), "OSRA", 4) == 0);
    CHECK((b[4] | b[5] << 8 | b[6] << 16 | b[7] << 24) == 1);
    CHECK(b[8] == 0);  // checkpoint
    CHECK(b[9] == static_cast<std::uint8_t>(MethodTag::OSoRA_K));
    CHECK(b[10] == static_cast<std::uint8_t>(OInit::Gaussian));
    CHECK(b[11] == static_cast<std::uint8_t>(TrainableSet::OnlyO));
    CHECK(le64(b, 12) == 5);
    CHECK(le64(b, 20) == 4);
    CHECK(le64(b, 28) == 2);
    CHECK(le64(b, 36) == 0xABCDEF);
    const Digest dg = weight_digest(w0);
    CHECK(std::memcmp(b.data() + 44, dg.data(), 32) == 0);
    CHECK(le64(b, 76) == 4);
    double first = 0.0;
    const std::uint64_t bits = le64(b, 84);
    std::memcpy(&first, &bits, 8);
    CHECK(first == st.o[0]);
}

TEST_CASE("weight digest is SHA-256 of little-endian doubles") {
    // SHA-256 of the 8 bytes of 1.0 (00 00 00 00 00 00 f0 3f), computed with hashlib.
    CHECK(to_hex(weight_digest(Matrix{{1.0}})) == "6c3c396ed6b5c36dcae172271f462051b1266b851e92df3deea8ac65478fd712");
}

TEST_CASE("load error paths") {
    TempDir tmp;
    const Matrix w0 = random_matrix(6, 5, 5, RandomScheme::Gaussian);
    const AdapterState st = build_adapter(w0, {MethodTag::OSoRA, 2}, 0);
    const std::string path = tmp.file("e.osra");
    save(st, path);
    const auto good = read_bytes(path);

    SUBCASE("digest mismatch") {
        auto bad = good;
        bad[50] ^= 0xFF;
        write_bytes(path, bad);
        CHECK_THROWS_AS(load(path, w0), DigestMismatch);
        write_bytes(path, good);
        Matrix other = w0;
        other(1, 1) = 0.5;
        CHECK_THROWS_AS(load(path, other), DigestMismatch);
    }
    SUBCASE("truncated payload") {
        auto bad = good;
        bad.resize(bad.size() - 8);
        write_bytes(path, bad);
        CHECK_THROWS_AS(load(path, w0), CorruptPayload);
        bad.resize(30);
        write_bytes(path, bad);
        CHECK_THROWS_AS(load(path, w0), CorruptPayload);
    }
    SUBCASE("payload count inconsistent with the method") {
        auto bad = good;
        bad.resize(bad.size() + 8);
        bad[76] += 1;
        write_bytes(path, bad);
        CHECK_THROWS_AS(load(path, w0), CorruptPayload);
    }
    SUBCASE("unsupported version") {
        auto bad = good;
        bad[4] = 2;
        write_bytes(path, bad);
        CHECK_THROWS_AS(load(path, w0), VersionUnsupported);
    }
    SUBCASE("bad magic and missing file") {
        auto bad = good;
        bad[0] = 'X';
        write_bytes(path, bad);
        CHECK_THROWS_AS(load(path, w0), CorruptPayload);
        CHECK_THROWS_AS(load(tmp.file("missing.osra"), w0), IoFailure);
    }
    SUBCASE("unwritable path") {
        CHECK_THROWS_AS(save(st, tmp.file("no/such/dir/x.osra")), IoFailure);
    }
}

TEST_CASE("snapshots carry the full state") {
    TempDir tmp;
    const Matrix w0 = random_matrix(7, 6, 6, RandomScheme::Gaussian);
    const Vector x = random_matrix(6, 1, 7, RandomScheme::Gaussian).col(0);
    for (const AdapterMethod& m : variants()) {
        CAPTURE(method_name(m.tag));
        AdapterState st = build_adapter(w0, m, 3);
        perturb_trainables(st, 4, 0.3);
        save_snapshot(st, tmp.file("s.osra"));
        const Snapshot snap = read_file(tmp.file("s.osra"));
        CHECK(snap.header.kind == FileKind::Snapshot);
        CHECK(snap.section("merged") == merge(st));
        const AdapterState back = state_from_snapshot(snap);
        CHECK(forward(back, x) == forward(st, x));
    }
}

TEST_CASE("encode/decode round-trips arbitrary snapshots") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        Snapshot s;
        s.header.kind = seed % 2 ? FileKind::Snapshot : FileKind::Checkpoint;
        s.header.method = {kAllMethods[seed % 7], 1 + seed % 5, OInit(seed % 2), TrainableSet(seed % 3)};
        s.header.d = 3 + seed;
        s.header.k = 2 * seed + 1;
        s.header.seed = derive_seed(seed, 9);
        s.header.digest[seed % 32] = static_cast<std::uint8_t>(seed);
        const Matrix p = random_matrix(1 + seed % 7, 1, seed, RandomScheme::Gaussian);
        s.payload.assign(p.data().begin(), p.data().end());
        s.header.payload_count = s.payload.size();
        if (s.header.kind == FileKind::Snapshot) {
            s.sections.push_back({"alpha", random_matrix(2, 3, seed + 1, RandomScheme::Gaussian)});
            s.sections.push_back({"b", random_matrix(1 + seed % 4, 2, seed + 2, RandomScheme::UniformScaled)});
        }
        const Snapshot back = decode(encode(s));
        CHECK(encode(back) == encode(s));
        CHECK(back.payload == s.payload);
        CHECK(back.header.method.rank == s.header.method.rank);
    }
}

}  // TEST_SUITE
