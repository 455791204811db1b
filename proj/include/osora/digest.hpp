// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "osora/matrix.hpp"

namespace osora {

using Digest = std::array<std::uint8_t, 32>;

/// SHA-256 over the row-major entries encoded as little-endian IEEE doubles.
Digest weight_digest(const Matrix& w);

std::string to_hex(const Digest& digest);

}  // namespace osora
