// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace osora::cli {

/// Process exit codes.
enum ExitCode : int {
    kOk = 0,
    kCheckFailed = 1,
    kBadArgument = 2,  // also RankOutOfRange and unknown preset
    kParseFailure = 3,
    kNonFiniteLoss = 4,
};

struct DecomposeOptions {
    std::string matrix_file;
    std::size_t rank = 1;
    std::string out;  // snapshot path, optional
};

struct TrainOptions {
    std::string method = "osora";
    std::size_t rank = 4;
    std::string o_init = "ones";
    std::string trainable = "both";
    std::size_t steps = 500;
    double lr = 1e-2;
    std::string optimizer = "adam";
    std::uint64_t seed = 0;
    std::size_t d = 32;
    std::size_t k = 32;
    std::size_t r_gap = 4;
    std::size_t probes = 64;
    std::string out;  // output directory, optional
};

struct CountOptions {
    std::string preset;
    std::vector<std::string> methods{"lora", "osora", "vera"};
    std::vector<std::uint64_t> ranks{64, 128, 256, 512};
    std::string out;           // CSV path; stdout when empty
    std::string presets_file;  // built-in presets when empty
};

struct VerifyOptions {
    std::string scope = "all";  // svd | grad | merge | persist | all
    std::uint64_t seed = 0;
    std::string fixture;  // optional snapshot to check for merge equivalence
};

/// Each command reports to `out`, diagnostics to `err`, and returns an ExitCode.
int cmd_decompose(const DecomposeOptions& opts, std::ostream& out, std::ostream& err);
int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err);
int cmd_count(const CountOptions& opts, std::ostream& out, std::ostream& err);
int cmd_verify(const VerifyOptions& opts, std::ostream& out, std::ostream& err);

/// Result of one invariant check run by cmd_verify.
struct CheckResult {
    std::string name;
    double max_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

/// The suites behind cmd_verify. Throws InvalidMethod for an unknown scope.
std::vector<CheckResult> run_checks(const VerifyOptions& opts);

}  // namespace osora::cli
