// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line driver: decompose, train, count, verify.

#include <iostream>

#include "CLI11.hpp"
#include "osora/commands.hpp"
#include "osora/errors.hpp"

namespace {

int run(int argc, char** argv) {
    using namespace osora::cli;

    CLI::App app{"SVD-initialised low-rank adaptation lab"};
    app.set_config("--config", "", "key = value config file with one [section] per command");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    DecomposeOptions dec;
    auto* decompose = app.add_subcommand("decompose", "Truncated SVD of a matrix text file");
    decompose->add_option("matrix", dec.matrix_file, "Matrix file ('rows cols' header, row-major values)")->required();
    decompose->add_option("--rank,-r", dec.rank, "Number of singular triplets to keep")->required();
    decompose->add_option("--out,-o", dec.out, "Write factors as a snapshot file");

    TrainOptions tr;
    auto* train = app.add_subcommand("train", "Train an adapter on the toy teacher-student task");
    train->add_option("--method", tr.method, "lora, vera, pissa, osora, osora_k, osora_dora, dora")->capture_default_str();
    train->add_option("--rank", tr.rank)->capture_default_str();
    train->add_option("--o-init", tr.o_init, "ones or gaussian")->capture_default_str();
    train->add_option("--trainable", tr.trainable, "both, only_s or only_o")->capture_default_str();
    train->add_option("--steps", tr.steps)->capture_default_str();
    train->add_option("--lr", tr.lr)->capture_default_str();
    train->add_option("--optimizer", tr.optimizer, "sgd or adam")->capture_default_str();
    train->add_option("--seed", tr.seed)->capture_default_str();
    train->add_option("--d", tr.d, "Output dim of the toy weight")->capture_default_str();
    train->add_option("--k", tr.k, "Input dim of the toy weight")->capture_default_str();
    train->add_option("--r-gap", tr.r_gap, "Rank of the teacher perturbation")->capture_default_str();
    train->add_option("--probes", tr.probes, "Number of probe columns")->capture_default_str();
    train->add_option("--out,-o", tr.out, "Directory for loss_trace.csv, checkpoint.osra, base_weight.txt");

    CountOptions cnt;
    auto* count = app.add_subcommand("count", "Trainable-parameter accounting sweep as CSV");
    count->add_option("--preset", cnt.preset, "Shape preset name")->required();
    count->add_option("--method", cnt.methods, "Methods (repeat or comma-separate)")->delimiter(',')->capture_default_str();
    count->add_option("--rank", cnt.ranks, "Ranks (repeat or comma-separate)")->delimiter(',')->capture_default_str();
    count->add_option("--out,-o", cnt.out, "CSV path (stdout when omitted)");
    count->add_option("--presets", cnt.presets_file, "Preset definitions file (built-in when omitted)");

    VerifyOptions ver;
    auto* verify = app.add_subcommand("verify", "Run the invariant suites");
    verify->add_option("scope", ver.scope, "svd, grad, merge, persist or all")->capture_default_str();
    verify->add_option("--seed", ver.seed)->capture_default_str();
    verify->add_option("--fixture", ver.fixture, "Snapshot whose stored merged weight must match its forward pass");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kBadArgument;
    }

    if (decompose->parsed()) return cmd_decompose(dec, std::cout, std::cerr);
    if (train->parsed()) return cmd_train(tr, std::cout, std::cerr);
    if (count->parsed()) return cmd_count(cnt, std::cout, std::cerr);
    return cmd_verify(ver, std::cout, std::cerr);
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const osora::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return osora::cli::kCheckFailed;
    }
}
