// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "osora/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "osora/accounting.hpp"
#include "osora/adapter.hpp"
#include "osora/errors.hpp"
#include "osora/persist.hpp"
#include "osora/svd.hpp"
#include "osora/textio.hpp"
#include "osora/trainer.hpp"

namespace osora::cli {

namespace fs = std::filesystem;

int cmd_decompose(const DecomposeOptions& opts, std::ostream& out, std::ostream& err) {
    Matrix w;
    try {
        w = read_matrix_file(opts.matrix_file);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kParseFailure;
    } catch (const IoFailure& e) {
        err << "error: " << e.what() << '\n';
        return kParseFailure;
    }

    SvdFactors f;
    try {
        f = svd_truncated(w, opts.rank);
    } catch (const RankOutOfRange& e) {
        err << "error: " << e.what() << '\n';
        return kBadArgument;
    }
    const double error = frobenius_norm(f.residual);
    const double scale = frobenius_norm(w);

    out << "shape: " << w.rows() << "x" << w.cols() << '\n';
    out << "rank: " << f.rank << '\n';
    out << "singular_values:";
    for (double s : f.s_r) out << ' ' << format_double(s);
    out << '\n';
    out << "reconstruction_error: " << format_double(error) << '\n';
    out << "relative_error: " << format_double(scale == 0.0 ? 0.0 : error / scale) << '\n';

    if (!opts.out.empty()) {
        const AdapterState st = build_adapter(w, AdapterMethod{MethodTag::OSoRA, opts.rank}, 0);
        save_snapshot(st, opts.out);
        out << "snapshot: " << opts.out << '\n';
    }
    return kOk;
}

int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err) {
    AdapterMethod method;
    TrainConfig config;
    try {
        method.tag = parse_method(opts.method);
        method.rank = opts.rank;
        method.o_init = parse_o_init(opts.o_init);
        method.trainable = parse_trainable_set(opts.trainable);
        config.optimizer = parse_optimizer(opts.optimizer);
    } catch (const InvalidMethod& e) {
        err << "error: " << e.what() << '\n';
        return kBadArgument;
    }
    config.steps = opts.steps;
    config.lr = opts.lr;

    TrainRun run;
    try {
        const ToyTask task = make_task(opts.d, opts.k, opts.r_gap, opts.seed, opts.probes);
        run = train(build_adapter(task.w0, method, opts.seed), task, config);
        if (!opts.out.empty()) {
            fs::create_directories(opts.out);
            const fs::path dir(opts.out);
            std::ofstream csv(dir / "loss_trace.csv", std::ios::trunc);
            if (!csv) throw IoFailure("cannot write " + (dir / "loss_trace.csv").string());
            CsvWriter writer(csv);
            writer.row({"step", "loss"});
            for (std::size_t i = 0; i < run.loss_trace.size(); ++i) {
                writer.row({std::to_string(i), format_double(run.loss_trace[i])});
            }
            save(run.final_state, (dir / "checkpoint.osra").string());
            write_matrix_file((dir / "base_weight.txt").string(), task.w0);
        }
    } catch (const NonFiniteLoss& e) {
        err << "error: " << e.what() << '\n';
        return kNonFiniteLoss;
    } catch (const RankOutOfRange& e) {
        err << "error: " << e.what() << '\n';
        return kBadArgument;
    } catch (const InvalidMethod& e) {
        err << "error: " << e.what() << '\n';
        return kBadArgument;
    }

    out << "method=" << method_name(method.tag) << " rank=" << method.rank << " o_init=" << o_init_name(method.o_init)
        << " trainable=" << trainable_set_name(method.trainable) << " optimizer=" << optimizer_name(config.optimizer)
        << " steps=" << config.steps << " init_loss=" << format_double(run.initial_loss())
        << " final_loss=" << format_double(run.final_loss()) << '\n';
    return kOk;
}

int cmd_count(const CountOptions& opts, std::ostream& out, std::ostream& err) {
    std::vector<SweepRow> rows;
    try {
        const std::vector<ShapePreset> presets =
            opts.presets_file.empty() ? builtin_presets() : load_presets(opts.presets_file);
        const ShapePreset& preset = find_preset(presets, opts.preset);
        std::vector<MethodTag> methods;
        for (const auto& m : opts.methods) methods.push_back(parse_method(m));
        rows = scaling_sweep(preset, methods, opts.ranks);
    } catch (const UnknownPreset& e) {
        err << "error: " << e.what() << '\n';
        return kBadArgument;
    } catch (const InvalidMethod& e) {
        err << "error: " << e.what() << '\n';
        return kBadArgument;
    } catch (const RankOutOfRange& e) {
        err << "error: " << e.what() << '\n';
        return kBadArgument;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kParseFailure;
    }

    std::ofstream file;
    if (!opts.out.empty()) {
        file.open(opts.out, std::ios::trunc);
        if (!file) {
            err << "error: cannot write " << opts.out << '\n';
            return kBadArgument;
        }
    }
    std::ostream& dst = opts.out.empty() ? out : file;
    CsvWriter csv(dst);
    csv.row({"method", "rank", "trainable_params", "memory_footprint"});
    for (const SweepRow& r : rows) {
        csv.row({std::string(method_name(r.method)), std::to_string(r.rank), std::to_string(r.trainable),
                 std::to_string(r.memory)});
    }
    return kOk;
}

int cmd_verify(const VerifyOptions& opts, std::ostream& out, std::ostream& err) {
    std::vector<CheckResult> results;
    try {
        results = run_checks(opts);
    } catch (const InvalidMethod& e) {
        err << "error: " << e.what() << '\n';
        return kBadArgument;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kCheckFailed;
    }
    bool all_passed = true;
    for (const CheckResult& r : results) {
        out << (r.passed ? "PASS " : "FAIL ") << r.name << " max_error=" << format_double(r.max_error)
            << " tol=" << format_double(r.tolerance) << '\n';
        all_passed = all_passed && r.passed;
    }
    out << (all_passed ? "all checks passed" : "some checks FAILED") << '\n';
    return all_passed ? kOk : kCheckFailed;
}

}  // namespace osora::cli
