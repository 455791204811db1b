// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <unistd.h>

#include "oracles.hpp"
#include "osora/accounting.hpp"
#include "osora/adapter.hpp"
#include "osora/gradients.hpp"
#include "osora/persist.hpp"
#include "osora/random.hpp"
#include "osora/svd.hpp"
#include "osora/trainer.hpp"

using namespace osora;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > budget_s) {
        out.pass = false;
        out.detail += " (over time budget)";
    }
    if (!out.pass) ++failures;
    std::printf("%s %d %s: %s [%.3fs / %.0fs]\n", out.pass ? "PASS" : "FAIL", id, name.c_str(), out.detail.c_str(), secs,
                budget_s);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), f, a);
    return buf;
}

double inf_norm(const Vector& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double max_off_identity(const Matrix& g) {
    double worst = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) worst = std::max(worst, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
    return worst;
}

Vector probe(const Matrix& x, std::size_t c) {
    Vector v(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) v[i] = x(i, c);
    return v;
}

std::vector<AdapterMethod> variants(std::size_t r) {
    std::vector<AdapterMethod> out;
    for (MethodTag tag : kAllMethods) out.push_back({tag, r});
    return out;
}

// 1: exact published totals.
Outcome exact_counts() {
    const ShapePreset& p = find_preset(builtin_presets(), "mistral7b_v03");
    struct Want {
        MethodTag tag;
        std::uint64_t r, total;
    };
    const Want wants[] = {{MethodTag::OSoRA, 512, 196608},
                          {MethodTag::OSoRA_K, 512, 294912},
                          {MethodTag::DoRA, 16, 6979584},
                          {MethodTag::OSoRA_DoRA, 512, 360448}};
    std::string detail;
    bool ok = true;
    for (const Want& w : wants) {
        const std::uint64_t got = report(p, w.tag, w.r).total_trainable;
        ok = ok && got == w.total;
        detail += std::string(method_name(w.tag)) + "@" + std::to_string(w.r) + "=" + std::to_string(got) + " ";
    }
    return {ok, detail};
}

// 2: affine scaling and slope comparison.
Outcome scaling_curve() {
    const ShapePreset& p = find_preset(builtin_presets(), "qwen2_7b");
    const std::vector<std::uint64_t> ranks{64, 128, 256, 512};
    bool ok = true;
    std::string detail;
    auto totals = [&](MethodTag tag) {
        std::vector<std::int64_t> t;
        for (auto r : ranks) t.push_back(static_cast<std::int64_t>(report(p, tag, r).total_trainable));
        return t;
    };
    for (MethodTag tag : {MethodTag::OSoRA, MethodTag::VeRA}) {
        const auto t = totals(tag);
        // Ranks are not equally spaced, so test divided differences.
        for (std::size_t i = 0; i + 2 < t.size(); ++i) {
            const std::int64_t lhs = (t[i + 2] - t[i + 1]) * static_cast<std::int64_t>(ranks[i + 1] - ranks[i]);
            const std::int64_t rhs = (t[i + 1] - t[i]) * static_cast<std::int64_t>(ranks[i + 2] - ranks[i + 1]);
            ok = ok && lhs == rhs;
        }
    }
    for (const TargetShape& t : p.targets) {
        const auto lora = static_cast<std::int64_t>(count_trainable(MethodTag::LoRA, t.d, t.k, 128) -
                                                    count_trainable(MethodTag::LoRA, t.d, t.k, 64)) / 64;
        const auto os = static_cast<std::int64_t>(count_trainable(MethodTag::OSoRA, t.d, t.k, 128) -
                                                  count_trainable(MethodTag::OSoRA, t.d, t.k, 64)) / 64;
        ok = ok && lora == static_cast<std::int64_t>(t.d + t.k) && lora > os;
        detail += t.name + ": lora slope " + std::to_string(lora) + " > osora slope " + std::to_string(os) + "; ";
    }
    detail += "second differences zero for osora, vera";
    return {ok, detail};
}

// 3: full SVD quality.
Outcome svd_quality() {
    double worst_rel = 0.0, worst_orth = 0.0;
    for (std::uint64_t i = 0; i < 20; ++i) {
        const std::size_t rows = 8 + (i * 37) % 121;  // 8..128
        const std::size_t cols = 4 + (i * 53) % 93;   // 4..96
        const Matrix w = random_matrix(rows, cols, derive_seed(77, i), RandomScheme::Gaussian);
        const SvdResult f = svd(w);
        worst_rel = std::max(worst_rel, frobenius_norm(reconstruct(f.u, f.s, f.v) - w) / frobenius_norm(w));
        worst_orth = std::max({worst_orth, max_off_identity(matmul_tn(f.u, f.u)), max_off_identity(matmul_tn(f.v, f.v))});
    }
    return {worst_rel <= 1e-12 && worst_orth <= 1e-10,
            fmt("max relative error %.3e", worst_rel) + fmt(", max orthonormality residual %.3e", worst_orth)};
}

// 4: every adapter is the identity on W0 at initialisation.
Outcome init_identity() {
    double worst = 0.0;
    std::size_t checked = 0;
    for (const AdapterMethod& m : variants(3)) {
        const Matrix w0 = random_matrix(16, 12, derive_seed(4, static_cast<std::uint64_t>(m.tag)), RandomScheme::Gaussian);
        const AdapterState st = build_adapter(w0, m, 9);
        const Matrix x = random_matrix(12, 100, derive_seed(5, static_cast<std::uint64_t>(m.tag)), RandomScheme::Gaussian);
        for (std::size_t c = 0; c < 100; ++c) {
            const Vector xc = probe(x, c);
            const Vector ref = oracle::apply(w0, xc);
            worst = std::max(worst, oracle::max_abs_diff(forward(st, xc), ref) / (1.0 + inf_norm(ref)));
            ++checked;
        }
    }
    return {worst <= 1e-12, std::to_string(checked) + " probes, worst scaled error " + fmt("%.3e", worst)};
}

// 5: merged weight reproduces the trained adapter.
Outcome merge_equivalence() {
    double worst = 0.0;
    const ToyTask task = make_task(16, 16, 3, 5);
    TrainConfig cfg;
    cfg.steps = 100;
    for (const AdapterMethod& m : variants(3)) {
        const TrainRun run = train(build_adapter(task.w0, m, 5), task, cfg);
        const Matrix merged = merge(run.final_state);
        const Matrix x = random_matrix(16, 50, 606, RandomScheme::Gaussian);
        for (std::size_t c = 0; c < 50; ++c) {
            const Vector xc = probe(x, c);
            const Vector f = forward(run.final_state, xc);
            worst = std::max(worst, oracle::max_abs_diff(oracle::apply(merged, xc), f) / (1.0 + inf_norm(f)));
        }
    }
    return {worst <= 1e-10, "7 methods x 50 probes after 100 Adam steps, worst " + fmt("%.3e", worst)};
}

double rel(const Vector& a, const Vector& b) { return oracle::max_abs_diff(a, b) / (1.0 + inf_norm(a)); }

// 6: analytic gradients vs finite differences, plus the closed forms for S and O.
Outcome gradient_matrix() {
    struct Shape {
        std::size_t d, k;
    };
    const Shape shapes[] = {{6, 5}, {5, 7}, {6, 6}};
    std::size_t instances = 0;
    double worst = 0.0, worst_s = 0.0, worst_o = 0.0;
    for (MethodTag tag : kAllMethods) {
        for (const Shape& sh : shapes) {
            for (std::size_t r = 1; r <= 3; ++r) {
                const std::uint64_t seed = derive_seed(600, instances);
                const Matrix w0 = random_matrix(sh.d, sh.k, derive_seed(seed, 0), RandomScheme::Gaussian);
                AdapterState st = build_adapter(w0, {tag, r}, derive_seed(seed, 1));
                perturb_trainables(st, derive_seed(seed, 2), 0.3);
                const Matrix x = random_matrix(sh.k, 8, derive_seed(seed, 3), RandomScheme::Gaussian);
                const Matrix y = random_matrix(sh.d, 8, derive_seed(seed, 4), RandomScheme::Gaussian);
                const Vector fd = oracle::finite_difference(st, x, y, 1e-6);
                worst = std::max(worst, rel(gradient(st, x, y).flat(), fd));
                ++instances;
                if (tag != MethodTag::OSoRA) continue;

                // G = (1/n)(W x − y) xᵀ with W assembled by the oracle.
                const Matrix w = oracle::dense_weight(st);
                const std::size_t n = x.cols();
                Matrix g(sh.d, sh.k);
                for (std::size_t c = 0; c < n; ++c)
                    for (std::size_t i = 0; i < sh.d; ++i) {
                        double e = -y(i, c);
                        for (std::size_t j = 0; j < sh.k; ++j) e += w(i, j) * x(j, c);
                        for (std::size_t j = 0; j < sh.k; ++j) g(i, j) += e * x(j, c) / static_cast<double>(n);
                    }
                // ∂S_l = Σ_ij U_il O_i G_ij V_jl
                Vector ds(r, 0.0);
                for (std::size_t l = 0; l < r; ++l)
                    for (std::size_t i = 0; i < sh.d; ++i)
                        for (std::size_t j = 0; j < sh.k; ++j) ds[l] += st.u(i, l) * st.o[i] * g(i, j) * st.v(j, l);
                // ∂O_i = Σ_jl G_ij V_jl S_l U_il
                Vector dor(sh.d, 0.0);
                for (std::size_t i = 0; i < sh.d; ++i)
                    for (std::size_t j = 0; j < sh.k; ++j)
                        for (std::size_t l = 0; l < r; ++l) dor[i] += g(i, j) * st.v(j, l) * st.s[l] * st.u(i, l);
                worst_s = std::max(worst_s, rel(ds, Vector(fd.begin(), fd.begin() + static_cast<std::ptrdiff_t>(r))));
                worst_o = std::max(worst_o, rel(dor, Vector(fd.begin() + static_cast<std::ptrdiff_t>(r), fd.end())));
            }
        }
    }
    const bool ok = instances >= 60 && worst <= 1e-6 && worst_s <= 1e-6 && worst_o <= 1e-6;
    return {ok, std::to_string(instances) + " instances, worst " + fmt("%.3e", worst) + fmt("; dS formula %.3e", worst_s) +
                    fmt("; corrected dO %.3e", worst_o)};
}

// 7: ablation orderings on the standard toy task.
Outcome ablation_orderings() {
    const TrainConfig cfg;  // Adam, lr 1e-2, 500 steps
    int joint_vs_s = 0, joint_vs_o = 0, ones_vs_gauss = 0;
    double m_joint = 0, m_s = 0, m_o = 0, m_gauss = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const ToyTask task = make_task(32, 32, 4, seed, 64);
        auto final_loss = [&](const AdapterMethod& m) { return train(build_adapter(task.w0, m, seed), task, cfg).final_loss(); };
        const double joint = final_loss({MethodTag::OSoRA, 4});
        const double only_s = final_loss({MethodTag::OSoRA, 4, OInit::Ones, TrainableSet::OnlyS});
        const double only_o = final_loss({MethodTag::OSoRA, 4, OInit::Ones, TrainableSet::OnlyO});
        const double gauss = final_loss({MethodTag::OSoRA, 4, OInit::Gaussian});
        joint_vs_s += joint < only_s;
        joint_vs_o += joint < only_o;
        ones_vs_gauss += joint < gauss;
        m_joint += joint / 10;
        m_s += only_s / 10;
        m_o += only_o / 10;
        m_gauss += gauss / 10;
    }
    const bool ok = m_joint <= m_s && m_joint <= m_o && m_joint <= m_gauss && joint_vs_s >= 7 && joint_vs_o >= 7 &&
                    ones_vs_gauss >= 7;
    return {ok, fmt("mean joint %.3e", m_joint) + fmt(", only_S %.3e", m_s) + fmt(", only_O %.3e", m_o) +
                    fmt(", gaussian-init %.3e", m_gauss) + "; strict wins " + std::to_string(joint_vs_s) + "/" +
                    std::to_string(joint_vs_o) + "/" + std::to_string(ones_vs_gauss) + " of 10"};
}

// 8: checkpoint round trip, payload size and storage ratio.
Outcome checkpoint_roundtrip() {
    const fs::path dir = fs::temp_directory_path() / ("osora-acceptance-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const std::size_t d = 24, k = 20, r = 4;
    const Matrix w0 = random_matrix(d, k, 808, RandomScheme::Gaussian);
    const Matrix x = random_matrix(k, 30, 809, RandomScheme::Gaussian);
    bool bitwise = true;
    std::uintmax_t osora_bytes = 0, lora_bytes = 0;
    for (const AdapterMethod& m : variants(r)) {
        AdapterState st = build_adapter(w0, m, 31);
        perturb_trainables(st, 32, 0.3);
        const std::string path = (dir / (std::string(method_name(m.tag)) + ".osra")).string();
        save(st, path);
        const AdapterState back = load(path, w0);
        const Matrix a = forward_batch(st, x), b = forward_batch(back, x);
        bitwise = bitwise && std::equal(a.data().begin(), a.data().end(), b.data().begin());
        const std::uintmax_t payload = fs::file_size(path) - kHeaderBytes;
        if (m.tag == MethodTag::OSoRA) osora_bytes = payload;
        if (m.tag == MethodTag::LoRA) lora_bytes = payload;
    }
    fs::remove_all(dir);
    const bool size_ok = osora_bytes == 8 * (r + d);
    const bool ratio_ok = static_cast<double>(osora_bytes) / static_cast<double>(lora_bytes) == param_ratio(d, k, r);
    return {bitwise && size_ok && ratio_ok,
            std::string(bitwise ? "bitwise forward match for all methods" : "forward mismatch") + "; osora payload " +
                std::to_string(osora_bytes) + " B (8(r+d) = " + std::to_string(8 * (r + d)) + "); storage ratio " +
                (ratio_ok ? "equals" : "differs from") + " param_ratio " + fmt("%.17g", param_ratio(d, k, r))};
}

}  // namespace

int main() {
    criterion(1, "exact parameter counts", 1, exact_counts);
    criterion(2, "scaling curve", 1, scaling_curve);
    criterion(3, "svd quality", 30, svd_quality);
    criterion(4, "initialization identity", 60, init_identity);
    criterion(5, "merge equivalence", 60, merge_equivalence);
    criterion(6, "gradient verification", 60, gradient_matrix);
    criterion(7, "ablation orderings", 120, ablation_orderings);
    criterion(8, "checkpoint round trip", 60, checkpoint_roundtrip);
    std::printf("NOT REPRODUCED 9 LLM benchmark accuracies (GPQA, MATH, GSM8K, commonsense suites): require full model "
                "fine-tuning; criteria 1-8 substitute\n");
    std::printf("%s: %d failure(s)\n", failures == 0 ? "ALL PASS" : "FAILED", failures);
    return failures == 0 ? 0 : 1;
}
