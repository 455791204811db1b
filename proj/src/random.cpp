// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "osora/random.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "osora/errors.hpp"

namespace osora {

namespace {

constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

// [0, 1)
double unit_closed_open(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * kTwoPow53Inv; }

// (0, 1]
double unit_open_closed(std::mt19937_64& gen) { return static_cast<double>((gen() >> 11) + 1) * kTwoPow53Inv; }

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, RandomScheme scheme) {
    if (rows == 0 || cols == 0) throw DimensionMismatch("random_matrix needs rows, cols >= 1");
    std::mt19937_64 gen(seed);
    Matrix m(rows, cols);
    auto data = m.data();
    switch (scheme) {
        case RandomScheme::UniformScaled: {
            const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
            for (double& v : data) v = bound * (2.0 * unit_closed_open(gen) - 1.0);
            break;
        }
        case RandomScheme::Gaussian: {
            const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
            // Box-Muller, both outputs used.
            for (std::size_t i = 0; i < data.size(); i += 2) {
                const double radius = std::sqrt(-2.0 * std::log(unit_open_closed(gen)));
                const double angle = 2.0 * std::numbers::pi * unit_closed_open(gen);
                data[i] = scale * radius * std::cos(angle);
                if (i + 1 < data.size()) data[i + 1] = scale * radius * std::sin(angle);
            }
            break;
        }
    }
    return m;
}

}  // namespace osora
