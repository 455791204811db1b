// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "osora/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "osora/errors.hpp"
#include "osora/gradients.hpp"
#include "osora/random.hpp"
#include "osora/svd.hpp"

namespace osora {

namespace {

enum Stream : std::uint64_t { kStreamW0 = 10, kStreamScaleO = 11, kStreamScaleS = 12, kStreamProbes = 13 };

// 1 + 0.5·uniform(-1, 1) factors.
Vector jitter(std::size_t n, std::uint64_t seed) {
    const Matrix u = random_matrix(n, 1, seed, RandomScheme::UniformScaled);
    const double bound = std::sqrt(6.0 / static_cast<double>(n + 1));
    Vector out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 + 0.5 * u(i, 0) / bound;
    return out;
}

class Optimizer {
public:
    Optimizer(const TrainConfig& cfg, std::size_t n) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

    void step(Vector& theta, const Vector& grad) {
        if (cfg_.optimizer == OptimizerKind::Sgd) {
            for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= cfg_.lr * grad[i];
            return;
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
            const double m_hat = m_[i] / bc1;
            const double v_hat = v_[i] / bc2;
            theta[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
        }
    }

private:
    TrainConfig cfg_;
    Vector m_;
    Vector v_;
    long t_ = 0;
};

void require_finite_loss(double loss, std::size_t step) {
    if (!std::isfinite(loss)) {
        throw NonFiniteLoss("loss became non-finite at step " + std::to_string(step) + "; lower the learning rate");
    }
}

}  // namespace

ToyTask make_task(std::size_t d, std::size_t k, std::size_t r_gap, std::uint64_t seed, std::size_t n) {
    if (r_gap == 0 || r_gap > std::min(d, k)) {
        throw RankOutOfRange("r_gap " + std::to_string(r_gap) + " outside [1, " + std::to_string(std::min(d, k)) + "]");
    }
    if (n == 0) n = 2 * std::max(d, k);

    ToyTask task;
    task.seed = seed;
    task.r_gap = r_gap;
    task.w0 = random_matrix(d, k, derive_seed(seed, kStreamW0), RandomScheme::Gaussian);

    const SvdFactors f = svd_truncated(task.w0, r_gap);
    task.o_star = jitter(d, derive_seed(seed, kStreamScaleO));
    task.s_star = jitter(r_gap, derive_seed(seed, kStreamScaleS));
    for (std::size_t l = 0; l < r_gap; ++l) task.s_star[l] *= f.s_r[l];
    task.w_target = f.residual + scale_rows(reconstruct(f.u_r, task.s_star, f.v_r), task.o_star);

    // Standard-normal probes.
    task.x = random_matrix(k, n, derive_seed(seed, kStreamProbes), RandomScheme::Gaussian);
    task.x *= std::sqrt(static_cast<double>(n));
    task.y = matmul(task.w_target, task.x);
    return task;
}

std::string_view optimizer_name(OptimizerKind kind) { return kind == OptimizerKind::Sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view name) {
    std::string n(name);
    std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
    if (n == "sgd") return OptimizerKind::Sgd;
    if (n == "adam") return OptimizerKind::Adam;
    throw InvalidMethod("unknown optimizer '" + std::string(name) + "'");
}

TrainRun train(AdapterState state, const ToyTask& task, const TrainConfig& config) {
    if (task.w0.rows() != state.d || task.w0.cols() != state.k) {
        throw DimensionMismatch("task and adapter shapes differ");
    }
    TrainRun run;
    run.config = config;
    run.loss_trace.reserve(config.steps + 1);

    Vector theta = trainable_vector(state);
    Optimizer opt(config, theta.size());
    for (std::size_t step = 0; step < config.steps; ++step) {
        const LossGrad g = gradient(state, task.x, task.y);
        require_finite_loss(g.loss, step);
        run.loss_trace.push_back(g.loss);
        opt.step(theta, g.flat());
        load_trainable(state, theta);
    }
    const double last = loss_mse(state, task.x, task.y);
    require_finite_loss(last, config.steps);
    run.loss_trace.push_back(last);
    run.final_state = std::move(state);
    return run;
}

}  // namespace osora
