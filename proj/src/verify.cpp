// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

#include "osora/adapter.hpp"
#include "osora/commands.hpp"
#include "osora/errors.hpp"
#include "osora/gradients.hpp"
#include "osora/persist.hpp"
#include "osora/random.hpp"
#include "osora/svd.hpp"

namespace osora::cli {

namespace fs = std::filesystem;

namespace {

struct Shape {
    std::size_t d;
    std::size_t k;
};

class Tracker {
public:
    Tracker(std::string name, double tol) : result_{std::move(name), 0.0, tol, true} {}
    void observe(double err) {
        result_.max_error = std::isnan(err) ? INFINITY : std::max(result_.max_error, err);
    }
    CheckResult finish() {
        result_.passed = result_.max_error <= result_.tolerance;
        return result_;
    }

private:
    CheckResult result_;
};

double orthonormality_residual(const Matrix& q) {
    Matrix g = matmul_tn(q, q);
    g -= Matrix::identity(q.cols());
    return max_abs(g);
}

AdapterMethod method_for(MethodTag tag, std::size_t r) { return AdapterMethod{tag, r}; }

void svd_checks(std::uint64_t seed, std::vector<CheckResult>& out) {
    Tracker recon("svd_reconstruction", 1e-12);
    Tracker orth("svd_orthonormality", 1e-10);
    Tracker spectrum("svd_known_spectrum", 1e-8);
    const Shape shapes[] = {{8, 6}, {6, 8}, {16, 16}, {24, 10}, {10, 24}, {32, 32}, {48, 20}, {64, 48}, {5, 5}, {40, 64}};
    for (std::size_t i = 0; i < 20; ++i) {
        const Shape s = shapes[i % std::size(shapes)];
        const Matrix w = random_matrix(s.d, s.k, derive_seed(seed, 100 + i), RandomScheme::Gaussian);
        const SvdResult f = svd(w);
        recon.observe(frobenius_norm(w - reconstruct(f.u, f.s, f.v)) / frobenius_norm(w));
        orth.observe(std::max(orthonormality_residual(f.u), orthonormality_residual(f.v)));
    }
    for (std::size_t i = 0; i < 4; ++i) {
        const std::size_t n = 12 + 4 * i;
        const Matrix q1 = svd(random_matrix(n, n, derive_seed(seed, 200 + i), RandomScheme::Gaussian)).u;
        const Matrix q2 = svd(random_matrix(n, n, derive_seed(seed, 300 + i), RandomScheme::Gaussian)).u;
        Vector sigma(n);
        for (std::size_t j = 0; j < n; ++j) sigma[j] = std::pow(10.0, -3.0 * static_cast<double>(j) / static_cast<double>(n));
        const Vector got = svd(reconstruct(q1, sigma, q2)).s;
        for (std::size_t j = 0; j < n; ++j) spectrum.observe(std::abs(got[j] - sigma[j]) / sigma[j]);
    }
    out.push_back(recon.finish());
    out.push_back(orth.finish());
    out.push_back(spectrum.finish());
}

void grad_checks(std::uint64_t seed, std::vector<CheckResult>& out) {
    Tracker fd("grad_vs_finite_difference", 1e-6);
    Tracker s_formula("grad_osora_s_formula", 1e-6);
    const Shape shapes[] = {{6, 10}, {10, 6}, {16, 16}};
    const std::size_t ranks[] = {1, 2, 4};
    std::uint64_t case_id = 0;
    for (MethodTag tag : kAllMethods) {
        for (Shape s : shapes) {
            for (std::size_t r : ranks) {
                ++case_id;
                const std::uint64_t cs = derive_seed(seed, 1000 + case_id);
                const Matrix w0 = random_matrix(s.d, s.k, derive_seed(cs, 0), RandomScheme::Gaussian);
                AdapterState st = build_adapter(w0, method_for(tag, r), derive_seed(cs, 1));
                perturb_trainables(st, derive_seed(cs, 2), 0.3);
                const Matrix x = random_matrix(s.k, 8, derive_seed(cs, 3), RandomScheme::Gaussian);
                const Matrix y = random_matrix(s.d, 8, derive_seed(cs, 4), RandomScheme::Gaussian);
                const LossGrad analytic = gradient(st, x, y);
                const LossGrad numeric = finite_diff(st, x, y, 1e-6);
                fd.observe(relative_grad_error(analytic, numeric));
                if (tag == MethodTag::OSoRA) {
                    const auto& a = analytic.slice("S").values;
                    const auto& b = numeric.slice("S").values;
                    double worst = 0.0;
                    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
                    s_formula.observe(worst / (1.0 + max_abs(a)));
                }
            }
        }
    }
    out.push_back(fd.finish());
    out.push_back(s_formula.finish());
}

void merge_checks(std::uint64_t seed, const std::string& fixture, std::vector<CheckResult>& out) {
    Tracker init("init_identity", 1e-12);
    Tracker merged("merge_equivalence", 1e-10);
    std::uint64_t id = 0;
    for (MethodTag tag : kAllMethods) {
        ++id;
        const Matrix w0 = random_matrix(16, 12, derive_seed(seed, 2000 + id), RandomScheme::Gaussian);
        AdapterState st = build_adapter(w0, method_for(tag, 3), derive_seed(seed, 2100 + id));
        const Matrix probes = random_matrix(12, 100, derive_seed(seed, 2200 + id), RandomScheme::Gaussian);
        for (std::size_t j = 0; j < probes.cols(); ++j) {
            const Vector x = probes.col(j);
            const Vector expect = matvec(w0, x);
            Vector diff = forward(st, x);
            for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= expect[i];
            init.observe(max_abs(diff) / (1.0 + max_abs(expect)));
        }
        perturb_trainables(st, derive_seed(seed, 2300 + id), 0.3);
        const Matrix w = merge(st);
        for (std::size_t j = 0; j < 50; ++j) {
            const Vector x = probes.col(j);
            const Vector f = forward(st, x);
            Vector diff = matvec(w, x);
            for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= f[i];
            merged.observe(max_abs(diff) / (1.0 + max_abs(f)));
        }
    }
    out.push_back(init.finish());
    out.push_back(merged.finish());

    if (!fixture.empty()) {
        Tracker fx("merge_equivalence[fixture]", 1e-10);
        const Snapshot snap = read_file(fixture);
        const AdapterState st = state_from_snapshot(snap);
        const Matrix& stored = snap.section("merged");
        const Matrix probes = random_matrix(st.k, 50, derive_seed(seed, 2400), RandomScheme::Gaussian);
        for (std::size_t j = 0; j < probes.cols(); ++j) {
            const Vector x = probes.col(j);
            const Vector f = forward(st, x);
            Vector diff = matvec(stored, x);
            for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= f[i];
            fx.observe(max_abs(diff) / (1.0 + max_abs(f)));
        }
        out.push_back(fx.finish());
    }
}

void persist_checks(std::uint64_t seed, std::vector<CheckResult>& out) {
    Tracker roundtrip("persist_roundtrip_bitwise", 0.0);
    Tracker digest("persist_digest_guard", 0.0);
    const fs::path dir = fs::temp_directory_path() / ("osora-verify-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    std::uint64_t id = 0;
    for (MethodTag tag : kAllMethods) {
        ++id;
        const Matrix w0 = random_matrix(10, 8, derive_seed(seed, 3000 + id), RandomScheme::Gaussian);
        AdapterState st = build_adapter(w0, method_for(tag, 2), derive_seed(seed, 3100 + id));
        perturb_trainables(st, derive_seed(seed, 3200 + id), 0.3);
        const std::string path = (dir / (std::string(method_name(tag)) + ".osra")).string();
        save(st, path);
        const AdapterState back = load(path, w0);
        const Matrix probes = random_matrix(8, 20, derive_seed(seed, 3300 + id), RandomScheme::Gaussian);
        for (std::size_t j = 0; j < probes.cols(); ++j) {
            const Vector a = forward(st, probes.col(j));
            const Vector b = forward(back, probes.col(j));
            roundtrip.observe(a == b ? 0.0 : 1.0);
        }
        Matrix other = w0;
        other(0, 0) += 1.0;
        bool rejected = false;
        try {
            (void)load(path, other);
        } catch (const DigestMismatch&) {
            rejected = true;
        }
        digest.observe(rejected ? 0.0 : 1.0);
    }
    fs::remove_all(dir);
    out.push_back(roundtrip.finish());
    out.push_back(digest.finish());
}

}  // namespace

std::vector<CheckResult> run_checks(const VerifyOptions& opts) {
    const std::string& scope = opts.scope;
    const bool all = scope == "all";
    if (!all && scope != "svd" && scope != "grad" && scope != "merge" && scope != "persist") {
        throw InvalidMethod("unknown verify scope '" + scope + "' (svd, grad, merge, persist, all)");
    }
    std::vector<CheckResult> results;
    if (all || scope == "svd") svd_checks(opts.seed, results);
    if (all || scope == "grad") grad_checks(opts.seed, results);
    if (all || scope == "merge") merge_checks(opts.seed, opts.fixture, results);
    if (all || scope == "persist") persist_checks(opts.seed, results);
    return results;
}

}  // namespace osora::cli
