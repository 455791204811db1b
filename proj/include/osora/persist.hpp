// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "osora/adapter.hpp"
#include "osora/digest.hpp"
#include "osora/matrix.hpp"

namespace osora {

// Checkpoint v1 byte layout (all integers and reals little-endian):
//
//   offset  size  field
//        0     4  magic "OSRA"
//        4     4  u32 format version (1)
//        8     1  u8 kind (0 = checkpoint, 1 = full snapshot)
//        9     1  u8 method tag (MethodTag value)
//       10     1  u8 o-init tag (OInit value)
//       11     1  u8 trainable-set tag (TrainableSet value)
//       12     8  u64 d
//       20     8  u64 k
//       28     8  u64 rank
//       36     8  u64 seed
//       44    32  SHA-256 digest of W0 (see weight_digest)
//       76     8  u64 payload count n
//       84   8·n  payload: trainable_vector as f64
//
// A checkpoint ends there. A snapshot continues with
//
//   u32 section count, then per section:
//   u16 name length, name bytes, u64 rows, u64 cols, rows·cols f64
//
// and carries every frozen tensor plus the merged weight.

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 84;

enum class FileKind : std::uint8_t { Checkpoint = 0, Snapshot = 1 };

struct CheckpointHeader {
    std::uint32_t version = kFormatVersion;
    FileKind kind = FileKind::Checkpoint;
    AdapterMethod method;
    std::uint64_t d = 0;
    std::uint64_t k = 0;
    std::uint64_t seed = 0;
    Digest digest{};
    std::uint64_t payload_count = 0;
};

struct NamedTensor {
    std::string name;
    Matrix value;
};

/// Raw contents of a checkpoint or snapshot file.
struct Snapshot {
    CheckpointHeader header;
    Vector payload;
    std::vector<NamedTensor> sections;  // empty for checkpoints

    /// Throws std::out_of_range.
    const Matrix& section(const std::string& name) const;
    Matrix& section(const std::string& name);
};

/// Writes the trainable vector and reconstruction metadata only. Throws IoFailure.
void save(const AdapterState& state, const std::string& path);

/// Rebuilds frozen tensors from w0 and the stored seed, then installs the payload.
/// Throws IoFailure, DigestMismatch, VersionUnsupported, CorruptPayload, DimensionMismatch.
AdapterState load(const std::string& path, const Matrix& w0);

/// Full state plus the merged weight, for fixtures and debugging.
void save_snapshot(const AdapterState& state, const std::string& path);
Snapshot snapshot_of(const AdapterState& state);
/// Rebuilds an AdapterState from snapshot sections alone (no W0 needed).
AdapterState state_from_snapshot(const Snapshot& snap);

/// Low-level encode/decode shared by both kinds. read_file throws the same
/// errors as load (except DigestMismatch).
std::vector<std::uint8_t> encode(const Snapshot& snap);
Snapshot decode(const std::vector<std::uint8_t>& bytes);
void write_file(const Snapshot& snap, const std::string& path);
Snapshot read_file(const std::string& path);

}  // namespace osora
