// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>

#include "osora/matrix.hpp"

namespace osora {

enum class RandomScheme {
    /// uniform(-a, a) with a = sqrt(6 / (rows + cols))
    UniformScaled,
    /// standard normal scaled by 1 / sqrt(cols)
    Gaussian,
};

/// Seeded random matrix. The stream is mt19937_64 with explicit
/// bit-to-double transforms, so output is identical across standard libraries.
Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, RandomScheme scheme);

/// Derives an independent seed for a numbered sub-stream (splitmix64 finaliser).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace osora
