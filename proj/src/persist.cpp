// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "osora/persist.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "osora/accounting.hpp"
#include "osora/errors.hpp"

namespace osora {

namespace {

constexpr char kMagic[4] = {'O', 'S', 'R', 'A'};

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void uint(std::uint64_t v, int width) {
        for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { uint(std::bit_cast<std::uint64_t>(v), 8); }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

    std::size_t remaining() const { return in_.size() - pos_; }
    void need(std::size_t n, const char* what) const {
        if (remaining() < n) throw CorruptPayload(std::string("file truncated in ") + what);
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return in_[pos_++];
    }
    std::uint64_t uint(int width, const char* what) {
        need(static_cast<std::size_t>(width), what);
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
        return v;
    }
    double f64(const char* what) { return std::bit_cast<double>(uint(8, what)); }
    void bytes(void* dst, std::size_t n, const char* what) {
        need(n, what);
        std::memcpy(dst, in_.data() + pos_, n);
        pos_ += n;
    }

private:
    const std::vector<std::uint8_t>& in_;
    std::size_t pos_ = 0;
};

template <typename Enum>
Enum checked_enum(std::uint8_t raw, std::uint8_t max, const char* what) {
    if (raw > max) throw CorruptPayload(std::string("invalid ") + what + " tag " + std::to_string(raw));
    return static_cast<Enum>(raw);
}

// Frozen tensors stored in snapshots, by method.
std::vector<NamedTensor> frozen_sections(const AdapterState& st) {
    std::vector<NamedTensor> out{{"base", st.base}};
    if (!st.u.empty()) out.push_back({"u", st.u});
    if (!st.v.empty()) out.push_back({"v", st.v});
    if (!st.basis_a.empty()) out.push_back({"basis_a", st.basis_a});
    if (!st.basis_b.empty()) out.push_back({"basis_b", st.basis_b});
    // Both OSoRA vectors, so an ablation's frozen half survives the round trip.
    if (!st.s.empty()) out.push_back({"S", Matrix::column(st.s)});
    if (!st.o.empty()) out.push_back({"O", Matrix::column(st.o)});
    return out;
}

}  // namespace

const Matrix& Snapshot::section(const std::string& name) const {
    for (const auto& s : sections)
        if (s.name == name) return s.value;
    throw std::out_of_range("snapshot has no section " + name);
}

Matrix& Snapshot::section(const std::string& name) {
    return const_cast<Matrix&>(std::as_const(*this).section(name));
}

std::vector<std::uint8_t> encode(const Snapshot& snap) {
    const CheckpointHeader& h = snap.header;
    if (h.payload_count != snap.payload.size()) throw LengthMismatch("header payload count disagrees with payload");
    Writer w;
    w.bytes(kMagic, 4);
    w.uint(h.version, 4);
    w.u8(static_cast<std::uint8_t>(h.kind));
    w.u8(static_cast<std::uint8_t>(h.method.tag));
    w.u8(static_cast<std::uint8_t>(h.method.o_init));
    w.u8(static_cast<std::uint8_t>(h.method.trainable));
    w.uint(h.d, 8);
    w.uint(h.k, 8);
    w.uint(h.method.rank, 8);
    w.uint(h.seed, 8);
    w.bytes(h.digest.data(), h.digest.size());
    w.uint(h.payload_count, 8);
    for (double v : snap.payload) w.f64(v);
    if (h.kind == FileKind::Snapshot) {
        w.uint(snap.sections.size(), 4);
        for (const auto& s : snap.sections) {
            w.uint(s.name.size(), 2);
            w.bytes(s.name.data(), s.name.size());
            w.uint(s.value.rows(), 8);
            w.uint(s.value.cols(), 8);
            for (double v : s.value.data()) w.f64(v);
        }
    }
    return w.take();
}

Snapshot decode(const std::vector<std::uint8_t>& bytes) {
    Reader r(bytes);
    char magic[4];
    r.bytes(magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) throw CorruptPayload("bad magic, not an OSRA file");
    Snapshot snap;
    CheckpointHeader& h = snap.header;
    h.version = static_cast<std::uint32_t>(r.uint(4, "version"));
    if (h.version != kFormatVersion) {
        throw VersionUnsupported("format version " + std::to_string(h.version) + " is not supported");
    }
    h.kind = checked_enum<FileKind>(r.u8("kind"), 1, "kind");
    h.method.tag = checked_enum<MethodTag>(r.u8("method"), 6, "method");
    h.method.o_init = checked_enum<OInit>(r.u8("o-init"), 1, "o-init");
    h.method.trainable = checked_enum<TrainableSet>(r.u8("trainable-set"), 2, "trainable-set");
    h.d = r.uint(8, "d");
    h.k = r.uint(8, "k");
    h.method.rank = r.uint(8, "rank");
    h.seed = r.uint(8, "seed");
    r.bytes(h.digest.data(), h.digest.size(), "digest");
    h.payload_count = r.uint(8, "payload count");
    if (h.payload_count > r.remaining() / 8) throw CorruptPayload("payload shorter than its declared count");
    snap.payload.resize(h.payload_count);
    for (double& v : snap.payload) v = r.f64("payload");
    if (h.kind == FileKind::Snapshot) {
        const auto count = r.uint(4, "section count");
        for (std::uint64_t i = 0; i < count; ++i) {
            NamedTensor t;
            t.name.resize(r.uint(2, "section name"));
            r.bytes(t.name.data(), t.name.size(), "section name");
            const auto rows = r.uint(8, "section rows");
            const auto cols = r.uint(8, "section cols");
            if (cols != 0 && rows > r.remaining() / 8 / cols) throw CorruptPayload("section " + t.name + " truncated");
            Vector data(rows * cols);
            for (double& v : data) v = r.f64("section data");
            t.value = Matrix(rows, cols, std::move(data));
            snap.sections.push_back(std::move(t));
        }
    }
    if (r.remaining() != 0) throw CorruptPayload("trailing bytes after payload");
    return snap;
}

void write_file(const Snapshot& snap, const std::string& path) {
    const auto bytes = encode(snap);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoFailure("write failed for " + path);
}

Snapshot read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode(bytes);
}

namespace {

CheckpointHeader header_of(const AdapterState& st, FileKind kind, std::size_t payload) {
    CheckpointHeader h;
    h.kind = kind;
    h.method = st.method;
    h.d = st.d;
    h.k = st.k;
    h.seed = st.seed;
    h.digest = st.base_digest;
    h.payload_count = payload;
    return h;
}

}  // namespace

void save(const AdapterState& state, const std::string& path) {
    Snapshot snap;
    snap.payload = trainable_vector(state);
    snap.header = header_of(state, FileKind::Checkpoint, snap.payload.size());
    write_file(snap, path);
}

AdapterState load(const std::string& path, const Matrix& w0) {
    const Snapshot snap = read_file(path);
    const CheckpointHeader& h = snap.header;
    if (weight_digest(w0) != h.digest) throw DigestMismatch("base weight digest does not match " + path);
    if (w0.rows() != h.d || w0.cols() != h.k) throw DimensionMismatch("base weight shape does not match checkpoint");
    h.method.validate(h.d, h.k);
    if (h.payload_count != count_trainable(h.method, h.d, h.k)) {
        throw CorruptPayload("payload count " + std::to_string(h.payload_count) + " does not match method");
    }
    AdapterState st = build_adapter(w0, h.method, h.seed);
    load_trainable(st, snap.payload);
    return st;
}

Snapshot snapshot_of(const AdapterState& state) {
    Snapshot snap;
    snap.payload = trainable_vector(state);
    snap.header = header_of(state, FileKind::Snapshot, snap.payload.size());
    snap.sections = frozen_sections(state);
    snap.sections.push_back({"merged", merge(state)});
    return snap;
}

void save_snapshot(const AdapterState& state, const std::string& path) { write_file(snapshot_of(state), path); }

AdapterState state_from_snapshot(const Snapshot& snap) {
    const CheckpointHeader& h = snap.header;
    if (h.kind != FileKind::Snapshot) throw CorruptPayload("not a snapshot file");
    h.method.validate(h.d, h.k);
    AdapterState st;
    st.method = h.method;
    st.d = h.d;
    st.k = h.k;
    st.seed = h.seed;
    st.base_digest = h.digest;
    for (const auto& s : snap.sections) {
        if (s.name == "base") st.base = s.value;
        else if (s.name == "u") st.u = s.value;
        else if (s.name == "v") st.v = s.value;
        else if (s.name == "basis_a") st.basis_a = s.value;
        else if (s.name == "basis_b") st.basis_b = s.value;
    }
    const std::size_t r = h.method.rank;
    // Size every trainable tensor before installing the payload.
    switch (h.method.tag) {
        case MethodTag::LoRA:
        case MethodTag::PiSSA:
        case MethodTag::DoRA:
            st.lora_a = Matrix(r, st.k);
            st.lora_b = Matrix(st.d, r);
            break;
        case MethodTag::VeRA:
            st.scale_b.assign(st.d, 0.0);
            st.scale_d.assign(r, 0.0);
            break;
        case MethodTag::OSoRA:
        case MethodTag::OSoRA_K:
        case MethodTag::OSoRA_DoRA:
            st.s.assign(r, 0.0);
            st.o.assign(h.method.tag == MethodTag::OSoRA_K ? st.k : st.d, 1.0);
            break;
    }
    if (has_magnitude(h.method.tag)) st.magnitude.assign(st.d, 0.0);
    for (const auto& sec : snap.sections) {
        if (sec.name == "S" && sec.value.size() == st.s.size()) st.s.assign(sec.value.data().begin(), sec.value.data().end());
        if (sec.name == "O" && sec.value.size() == st.o.size()) st.o.assign(sec.value.data().begin(), sec.value.data().end());
    }
    if (st.base.rows() != st.d || st.base.cols() != st.k) throw CorruptPayload("snapshot base has wrong shape");
    try {
        load_trainable(st, snap.payload);
    } catch (const LengthMismatch& e) {
        throw CorruptPayload(e.what());
    }
    return st;
}

}  // namespace osora
