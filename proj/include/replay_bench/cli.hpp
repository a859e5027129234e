#pragma once

// Command-line front end: prepare-data, build-clt, run, matrix, report and
// dump-samples. Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "replay_bench/clt.hpp"
#include "replay_bench/config.hpp"
#include "replay_bench/data.hpp"
#include "replay_bench/errors.hpp"
#include "replay_bench/log.hpp"
#include "replay_bench/matrix.hpp"
#include "replay_bench/nn/checkpoint.hpp"
#include "replay_bench/report.hpp"
#include "replay_bench/trainer.hpp"

namespace replay_bench::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

/// Flags shared by run and matrix; unset flags leave the profile value.
struct RunFlags {
    std::string profile = "desk";
    std::string config_file;
    std::string dataset = "mnist";
    std::string data_dir;
    std::optional<int> epochs;
    std::optional<int> eval_every;
    std::optional<int> num_subtasks;
    std::optional<std::string> budget;
    std::optional<double> alpha;
    std::optional<std::size_t> base_n;
    std::optional<double> ewc_lambda;
    std::optional<std::string> seeds;
    std::string out = "results";
    bool no_checkpoints = false;

    void attach(CLI::App& app) {
        app.add_option("--profile", profile, "Named profile: desk or full")
            ->check(CLI::IsMember({"desk", "full"}))
            ->capture_default_str();
        app.add_option("--config", config_file, "Flat key = value config file applied over the profile");
        app.add_option("--dataset", dataset, "Dataset name (subdirectory of the data directory)")
            ->check(CLI::IsMember({"mnist", "fashion"}))
            ->capture_default_str();
        app.add_option("--data", data_dir, "Directory holding the IDX files (default: $REPLAY_BENCH_DATA)");
        app.add_option("--epochs", epochs, "Epochs per sub-task");
        app.add_option("--eval-every", eval_every, "Evaluate every k epochs");
        app.add_option("--num-subtasks", num_subtasks, "Sub-tasks for rotation and permutation CLTs");
        app.add_option("--budget", budget, "Replay budget schedule")
            ->check(CLI::IsMember({"balanced", "constant", "scaled"}));
        app.add_option("--alpha", alpha, "Scale for the scaled budget");
        app.add_option("--base-n", base_n, "Samples per past sub-task (N)");
        app.add_option("--ewc-lambda", ewc_lambda, "EWC penalty strength");
        app.add_option("--out", out, "Results directory")->capture_default_str();
        app.add_flag("--no-checkpoints", no_checkpoints, "Do not save final model weights");
    }

    RunConfig resolve() const {
        RunConfig c = profile_config(profile);
        if (!config_file.empty()) c = load_config_file(config_file, c);
        c.dataset = dataset;
        if (epochs) c.epochs_per_subtask = *epochs;
        if (eval_every) c.eval_every = *eval_every;
        if (num_subtasks) c.num_subtasks = *num_subtasks;
        if (budget) c.budget.schedule = replay::parse_schedule(*budget);
        if (alpha) c.budget.alpha = *alpha;
        if (base_n) c.budget.base_n = *base_n;
        if (ewc_lambda) c.ewc.lambda = *ewc_lambda;
        if (seeds) c.seeds = parse_seeds(*seeds);
        c.validate();
        return c;
    }
};

inline fs::path data_root(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("REPLAY_BENCH_DATA"); env && *env) return env;
    throw ArgumentError("no data directory: pass --data or set REPLAY_BENCH_DATA");
}

inline data::CanonicalSplits load_splits(const std::string& data_flag, const RunConfig& c) {
    const auto dir = data::resolve_dataset_dir(data_root(data_flag), c.dataset);
    log::info("loading " + c.dataset + " from " + dir.string());
    return data::load_canonical_splits(dir, c.val_count, c.split_seed);
}

/// Rows of `images` tiled into a grid, written as binary PGM.
inline void write_pgm_grid(const fs::path& path, const Matrix& images, int columns, int side = data::kImageSide) {
    const int n = static_cast<int>(images.rows());
    const int cols = std::max(1, std::min(columns, n));
    const int rows = (n + cols - 1) / cols;
    const int w = cols * side, h = std::max(1, rows) * side;
    std::vector<unsigned char> px(static_cast<std::size_t>(w * h), 0);
    for (int i = 0; i < n; ++i)
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) {
                const float v = std::clamp(images(i, y * side + x), 0.0f, 1.0f);
                px[static_cast<std::size_t>(((i / cols) * side + y) * w + (i % cols) * side + x)] =
                    static_cast<unsigned char>(std::lround(v * 255.0f));
            }
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P5\n" << w << " " << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

inline gen::GenerativeModel<float> load_generative_checkpoint(const fs::path& dir) {
    std::ifstream kind_file(dir / "generator.kind");
    if (!kind_file) throw IoError("no generator checkpoint in " + dir.string());
    std::string kind;
    gen::GenerativeModel<float> m;
    kind_file >> kind >> m.latent_dim >> m.num_classes;
    m.kind = gen::parse_generator_kind(kind);
    m.generator = nn::load_checkpoint<float>(dir, "generator").network;
    m.companion = nn::load_checkpoint<float>(dir, "companion").network;
    m.data_dim = m.generator.output_dim();
    return m;
}

inline int parse_and_dispatch(int argc, char** argv) {
    CLI::App app{"Continual learning benchmark: generative replay vs EWC"};
    app.require_subcommand(1, 1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "debug, info, warning, error or silent")
        ->check(CLI::IsMember({"debug", "info", "warning", "error", "silent"}));

    // prepare-data
    auto* prep = app.add_subcommand("prepare-data", "Load IDX files, split train/validation, write a cache");
    std::string prep_data, prep_dataset = "mnist", prep_out;
    std::size_t prep_val = 5000;
    std::uint64_t prep_seed = 0;
    prep->add_option("--data", prep_data, "Directory holding the IDX files (default: $REPLAY_BENCH_DATA)");
    prep->add_option("--dataset", prep_dataset)->check(CLI::IsMember({"mnist", "fashion"}))->capture_default_str();
    prep->add_option("--out", prep_out, "Cache directory")->required();
    prep->add_option("--val-count", prep_val, "Validation samples held out of the train file")->capture_default_str();
    prep->add_option("--seed", prep_seed, "Split shuffle seed")->capture_default_str();

    // build-clt
    auto* build = app.add_subcommand("build-clt", "Build a task sequence and write it to disk");
    std::string build_data, build_dataset = "mnist", build_clt = "disjoint", build_out;
    std::uint64_t build_seed = 0;
    int build_tasks = 5;
    std::size_t build_val = 5000;
    build->add_option("--data", build_data, "Directory holding the IDX files (default: $REPLAY_BENCH_DATA)");
    build->add_option("--dataset", build_dataset)->check(CLI::IsMember({"mnist", "fashion"}))->capture_default_str();
    build->add_option("--clt", build_clt)->check(CLI::IsMember({"disjoint", "rotations", "permutations"}))->capture_default_str();
    build->add_option("--seed", build_seed)->capture_default_str();
    build->add_option("--num-subtasks", build_tasks)->capture_default_str();
    build->add_option("--val-count", build_val, "Validation samples held out of the train file")->capture_default_str();
    build->add_option("--out", build_out, "Output directory")->required();

    // run
    auto* run = app.add_subcommand("run", "Train one strategy on one CLT with one seed");
    RunFlags run_flags;
    run_flags.attach(*run);
    std::string run_strategy, run_clt = "disjoint";
    std::uint64_t run_seed = 0;
    run->add_option("--strategy", run_strategy, "Strategy")->required()->check(CLI::IsMember(strategy_names()));
    run->add_option("--clt", run_clt)->check(CLI::IsMember({"disjoint", "rotations", "permutations"}))->capture_default_str();
    run->add_option("--seed", run_seed)->capture_default_str();

    // matrix
    auto* mat = app.add_subcommand("matrix", "Run strategies x CLTs x seeds");
    RunFlags mat_flags;
    mat_flags.attach(*mat);
    std::vector<std::string> mat_strategies = strategy_names();
    std::vector<std::string> mat_clts{"disjoint", "rotations", "permutations"};
    int mat_workers = 1;
    bool mat_fresh = false;
    std::vector<double> sweep_lambdas;
    mat->add_option("--strategies", mat_strategies, "Strategies to run (default: all)")
        ->check(CLI::IsMember(strategy_names()));
    mat->add_option("--clts", mat_clts, "CLTs to run (default: all)")
        ->check(CLI::IsMember({"disjoint", "rotations", "permutations"}));
    mat->add_option("--seeds", mat_flags.seeds, "Seed list, e.g. 0,1,2 or 0-7");
    mat->add_option("--workers", mat_workers, "Concurrent runs")->check(CLI::PositiveNumber)->capture_default_str();
    mat->add_flag("--fresh", mat_fresh, "Re-run completed runs instead of skipping them");
    mat->add_option("--ewc-sweep", sweep_lambdas,
                    "Instead of the matrix, sweep EWC lambda on the permutation CLT scored on validation data");

    // report
    auto* rep = app.add_subcommand("report", "Plots and summary from a results directory");
    std::string rep_results = "results", rep_format = "svg", rep_out;
    rep->add_option("--results", rep_results, "Results directory")->capture_default_str();
    rep->add_option("--format", rep_format)->check(CLI::IsMember({"svg", "png", "both"}))->capture_default_str();
    rep->add_option("--out", rep_out, "Output directory (default: <results>/report)");

    // dump-samples
    auto* dump = app.add_subcommand("dump-samples", "Write a grid of generated samples from a checkpoint");
    std::string dump_ckpt, dump_out = "samples.pgm";
    std::size_t dump_count = 100;
    std::uint64_t dump_seed = 0;
    int dump_columns = 10;
    dump->add_option("--checkpoint", dump_ckpt, "Checkpoint directory of a run")->required();
    dump->add_option("--out", dump_out, "Output PGM file")->capture_default_str();
    dump->add_option("--count", dump_count, "Samples (per class for conditional models)")->capture_default_str();
    dump->add_option("--seed", dump_seed)->capture_default_str();
    dump->add_option("--columns", dump_columns)->check(CLI::PositiveNumber)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (log_level == "debug") log::set_level(log::Level::debug);
        else if (log_level == "warning") log::set_level(log::Level::warning);
        else if (log_level == "error") log::set_level(log::Level::error);
        else if (log_level == "silent") log::set_level(log::Level::silent);

        if (*prep) {
            const auto dir = data::resolve_dataset_dir(data_root(prep_data), prep_dataset);
            const auto splits = data::load_canonical_splits(dir, prep_val, prep_seed);
            data::save_dataset(fs::path(prep_out) / "train", splits.train);
            data::save_dataset(fs::path(prep_out) / "val", splits.val);
            data::save_dataset(fs::path(prep_out) / "test", splits.test);
            std::cout << "train " << splits.train.size() << ", val " << splits.val.size() << ", test "
                      << splits.test.size() << " written to " << prep_out << "\n";
            return kExitOk;
        }
        if (*build) {
            RunConfig c;
            c.dataset = build_dataset;
            c.val_count = build_val;
            const auto splits = load_splits(build_data, c);
            const auto seq = clt::build(clt::parse_clt_kind(build_clt), splits.train, splits.test, build_tasks, build_seed);
            clt::save_task_sequence(build_out, seq);
            std::cout << seq.size() << " sub-tasks written to " << build_out << "\n";
            return kExitOk;
        }
        if (*run) {
            RunConfig c = run_flags.resolve();
            c.clt = clt::parse_clt_kind(run_clt);
            const auto splits = load_splits(run_flags.data_dir, c);
            const auto seq = clt::build(c.clt, splits.train, splits.test, c.num_subtasks, run_seed);
            const runner::RunSpec spec{Strategy::make(parse_strategy_kind(run_strategy), c.budget, c.ewc), c.clt,
                                       run_seed};
            const auto result = runner::execute_run(spec, seq, c, run_flags.out, !run_flags.no_checkpoints);
            if (result.status == runner::RunStatus::failed) {
                std::cerr << "run failed: " << result.error << "\n";
                return kExitFailure;
            }
            const auto& last = result.log.back();
            std::cout << spec.strategy.label() << " " << run_clt << " seed " << run_seed << ": whole "
                      << last.whole_acc << ", first " << last.first_acc << "\n"
                      << (result.dir / "metrics.csv").string() << "\n";
            return kExitOk;
        }
        if (*mat) {
            RunConfig c = mat_flags.resolve();
            const auto splits = load_splits(mat_flags.data_dir, c);
            if (!sweep_lambdas.empty()) {
                nlohmann::ordered_json out = nlohmann::ordered_json::array();
                for (auto seed : c.seeds)
                    for (const auto& p : train::ewc_lambda_sweep(sweep_lambdas, splits.train, splits.val, c, seed)) {
                        std::cout << "seed " << seed << " lambda " << p.lambda << ": validation whole "
                                  << p.final_whole_acc << ", first " << p.final_first_acc << "\n";
                        out.push_back({{"seed", seed}, {"lambda", p.lambda}, {"val_whole_acc", p.final_whole_acc},
                                       {"val_first_acc", p.final_first_acc}});
                    }
                runner::write_text_atomic(fs::path(mat_flags.out) / "ewc_sweep.json", out.dump(2) + "\n");
                return kExitOk;
            }
            std::vector<Strategy> strategies;
            for (const auto& s : mat_strategies) strategies.push_back(Strategy::make(parse_strategy_kind(s), c.budget, c.ewc));
            std::vector<clt::CltKind> clts;
            for (const auto& k : mat_clts) clts.push_back(clt::parse_clt_kind(k));
            runner::MatrixOptions opts;
            opts.out = mat_flags.out;
            opts.workers = mat_workers;
            opts.resume = !mat_fresh;
            opts.save_checkpoints = !mat_flags.no_checkpoints;
            const auto result = runner::run_matrix(strategies, clts, c, splits.train, splits.test, opts);
            std::cout << result.runs.size() << " runs: " << result.count(runner::RunStatus::complete) << " completed, "
                      << result.count(runner::RunStatus::skipped) << " skipped, "
                      << result.count(runner::RunStatus::failed) << " failed\n";
            return result.count(runner::RunStatus::failed) ? kExitFailure : kExitOk;
        }
        if (*rep) {
            report::ReportOptions opts;
            opts.format = plot::parse_format(rep_format);
            opts.out_dir = rep_out;
            const auto r = report::write_report(rep_results, opts);
            std::cout << r.complete << " complete and " << r.failed << " failed runs, " << r.files.size()
                      << " files written\n";
            return kExitOk;
        }
        if (*dump) {
            const auto model = load_generative_checkpoint(dump_ckpt);
            Rng rng(dump_seed);
            Matrix images;
            if (model.conditional()) {
                images.resize(0, model.data_dim);
                for (int c = 0; c < model.num_classes; ++c)
                    images = gen::vcat<float>(images, gen::sample_conditional(model, c, dump_count, rng).images);
            } else {
                images = gen::sample_marginal(model, dump_count, rng);
            }
            write_pgm_grid(dump_out, images, model.conditional() ? static_cast<int>(dump_count) : dump_columns);
            std::cout << images.rows() << " samples written to " << dump_out << "\n";
            return kExitOk;
        }
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace replay_bench::cli
