// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "osora/adapter.hpp"
#include "osora/matrix.hpp"

namespace osora {

/// Teacher-student recovery problem: adapt w0 so that w0-based predictions
/// match targets produced by w_target on the probe columns.
struct ToyTask {
    Matrix w0;        // d x k
    Matrix w_target;  // d x k
    Matrix x;         // k x n probes
    Matrix y;         // d x n, w_target · x
    Vector o_star;    // d, teacher output scales
    Vector s_star;    // r_gap, teacher singular values
    std::size_t r_gap = 0;
    std::uint64_t seed = 0;
};

/// Builds a task whose target re-weights the top r_gap singular triplets of
/// w0 by random output scales o* and singular values s*:
///
///   w_target = w0 − U_g Λ_σ V_gᵀ + Λ_{o*} U_g Λ_{s*} V_gᵀ
///
/// which OSoRA at rank r_gap represents exactly (O = o*, S = s*).
/// n defaults to 2·max(d, k). Throws RankOutOfRange.
ToyTask make_task(std::size_t d, std::size_t k, std::size_t r_gap, std::uint64_t seed, std::size_t n = 0);

enum class OptimizerKind { Sgd, Adam };

std::string_view optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct TrainConfig {
    std::size_t steps = 500;
    double lr = 1e-2;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainRun {
    TrainConfig config;
    std::vector<double> loss_trace;  // steps + 1 entries, [0] is the initial loss
    AdapterState final_state;

    double initial_loss() const { return loss_trace.front(); }
    double final_loss() const { return loss_trace.back(); }
};

/// Full-batch training on the task's probes. Frozen tensors are never
/// touched; only the trainable_vector slice is updated.
/// Throws DimensionMismatch, NonFiniteLoss.
TrainRun train(AdapterState state, const ToyTask& task, const TrainConfig& config);

}  // namespace osora
