#pragma once

// Single-run execution with on-disk results, and the strategy x CLT x seed
// matrix built on top of it.
//
// results/<clt>/<strategy label>/<seed>/
//     metrics.csv     one row per evaluation
//     summary.json    status, final accuracies, config echo
//     checkpoints/    final classifier and generator

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "replay_bench/clt.hpp"
#include "replay_bench/config.hpp"
#include "replay_bench/data.hpp"
#include "replay_bench/errors.hpp"
#include "replay_bench/log.hpp"
#include "replay_bench/metrics.hpp"
#include "replay_bench/nn/checkpoint.hpp"
#include "replay_bench/trainer.hpp"

namespace replay_bench::runner {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct RunSpec {
    Strategy strategy;
    clt::CltKind clt = clt::CltKind::disjoint;
    std::uint64_t seed = 0;
};

inline fs::path run_directory(const fs::path& root, const RunSpec& spec) {
    return root / clt::to_string(spec.clt) / spec.strategy.label() / std::to_string(spec.seed);
}

enum class RunStatus { complete, failed, skipped };

inline std::string to_string(RunStatus s) {
    switch (s) {
        case RunStatus::complete: return "complete";
        case RunStatus::failed: return "failed";
        case RunStatus::skipped: return "skipped";
    }
    return "?";
}

struct RunResult {
    RunSpec spec;
    RunStatus status = RunStatus::complete;
    std::string error;
    metrics::MetricLog log;
    fs::path dir;
};

/// Write to a sibling temp file, then rename over the target.
inline void write_text_atomic(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << text;
        if (!out) throw IoError("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError("bad JSON in " + path.string() + ": " + e.what());
    }
}

/// A run counts as done when its summary says so and its metrics exist.
inline bool is_complete(const fs::path& dir) {
    const auto summary = dir / "summary.json";
    if (!fs::exists(summary) || !fs::exists(dir / "metrics.csv")) return false;
    try {
        return read_json(summary).value("status", "") == "complete";
    } catch (const Error&) {
        return false;
    }
}

inline json summary_json(const RunSpec& spec, const RunConfig& config, const clt::TaskSequence& seq,
                         const metrics::MetricLog& log, RunStatus status, const TrainingError* error) {
    json j;
    j["status"] = to_string(status);
    j["strategy"] = spec.strategy.label();
    j["strategy_kind"] = to_string(spec.strategy.kind);
    j["clt"] = clt::to_string(spec.clt);
    j["dataset"] = config.dataset;
    j["seed"] = spec.seed;
    j["num_subtasks"] = seq.size();
    j["num_records"] = log.size();
    if (!log.empty()) {
        j["final_whole_acc"] = log.back().whole_acc;
        j["final_first_acc"] = log.back().first_acc;
    }
    if (error) j["error"] = {{"message", error->what()}, {"subtask", error->subtask()}, {"epoch", error->epoch()}};
    json cfg;
    for (const auto& [k, v] : config_items(config)) cfg[k] = v;
    cfg["seeds"] = std::to_string(spec.seed);
    j["config"] = cfg;
    return j;
}

inline void save_run_checkpoints(const fs::path& dir, const train::RunState& state, std::uint64_t seed) {
    const auto ck = dir / "checkpoints";
    nn::save_checkpoint(ck, "classifier", state.classifier, seed);
    if (state.generator) {
        nn::save_checkpoint(ck, "generator", state.generator->generator, seed);
        nn::save_checkpoint(ck, "companion", state.generator->companion, seed);
        write_text_atomic(ck / "generator.kind",
                          gen::to_string(state.generator->kind) + " " + std::to_string(state.generator->latent_dim) +
                              " " + std::to_string(state.generator->num_classes) + "\n");
    }
}

/// Runs one (strategy, sequence, seed), writing metrics.csv, summary.json
/// and checkpoints under run_directory(root, spec). Failures are recorded
/// on disk and returned, never thrown.
inline RunResult execute_run(const RunSpec& spec, const clt::TaskSequence& seq, RunConfig config, const fs::path& root,
                             bool save_checkpoints = true) {
    config.clt = spec.clt;
    RunResult result;
    result.spec = spec;
    result.dir = run_directory(root, spec);
    try {
        auto outcome = train::run_continual_with_state(spec.strategy, seq, config, spec.seed);
        result.log = std::move(outcome.log);
        if (save_checkpoints) save_run_checkpoints(result.dir, outcome.state, spec.seed);
        write_text_atomic(result.dir / "metrics.csv", metrics::to_csv(result.log));
        write_text_atomic(result.dir / "summary.json",
                          summary_json(spec, config, seq, result.log, RunStatus::complete, nullptr).dump(2) + "\n");
        result.status = RunStatus::complete;
    } catch (const train::RunError& e) {
        result.status = RunStatus::failed;
        result.error = e.what();
        result.log = e.partial_log();
        log::error(result.error);
        write_text_atomic(result.dir / "metrics.csv", metrics::to_csv(result.log));
        write_text_atomic(result.dir / "summary.json",
                          summary_json(spec, config, seq, result.log, RunStatus::failed, &e).dump(2) + "\n");
    }
    return result;
}

inline std::vector<RunSpec> plan_matrix(const std::vector<Strategy>& strategies,
                                        const std::vector<clt::CltKind>& clts,
                                        const std::vector<std::uint64_t>& seeds) {
    std::vector<RunSpec> out;
    for (auto c : clts)
        for (auto s : seeds)
            for (const auto& st : strategies) out.push_back({st, c, s});
    return out;
}

struct MatrixOptions {
    fs::path out = "results";
    int workers = 1;
    bool resume = true;
    bool save_checkpoints = true;
    /// Called right before a run starts (not for skipped runs).
    std::function<void(const RunSpec&)> on_start;
};

struct MatrixResult {
    std::vector<RunResult> runs;

    std::size_t count(RunStatus s) const {
        return static_cast<std::size_t>(
            std::count_if(runs.begin(), runs.end(), [s](const RunResult& r) { return r.status == s; }));
    }
};

/// Runs every strategy x CLT x seed in `config.seeds`. Each (CLT, seed)
/// sequence is built once and shared by its strategies; up to `workers`
/// runs of one sequence execute concurrently. Completed runs found on disk
/// are skipped when resuming.
inline MatrixResult run_matrix(const std::vector<Strategy>& strategies, const std::vector<clt::CltKind>& clts,
                               const RunConfig& config, const data::LabeledDataset& train,
                               const data::LabeledDataset& test, const MatrixOptions& options) {
    config.validate();
    for (const auto& s : strategies) s.validate();
    MatrixResult result;
    if (strategies.empty()) return result;
    const auto plan = plan_matrix(strategies, clts, config.seeds);
    log::info("matrix: " + std::to_string(plan.size()) + " runs scheduled");

    for (std::size_t g = 0; g < plan.size(); g += strategies.size()) {
        const std::vector<RunSpec> group(plan.begin() + static_cast<std::ptrdiff_t>(g),
                                         plan.begin() + static_cast<std::ptrdiff_t>(g + strategies.size()));
        std::vector<RunResult> group_results(group.size());
        std::vector<std::size_t> pending;
        for (std::size_t i = 0; i < group.size(); ++i) {
            const auto dir = run_directory(options.out, group[i]);
            if (options.resume && is_complete(dir)) {
                group_results[i].spec = group[i];
                group_results[i].status = RunStatus::skipped;
                group_results[i].dir = dir;
                group_results[i].log = metrics::import_csv(dir / "metrics.csv");
                log::info("skip completed run " + dir.string());
            } else {
                pending.push_back(i);
            }
        }
        if (!pending.empty()) {
            const auto& first = group.front();
            const auto seq = clt::build(first.clt, train, test, config.num_subtasks, first.seed);
            std::atomic<std::size_t> next{0};
            std::exception_ptr failure;
            std::mutex failure_mutex;
            auto worker = [&] {
                try {
                    for (std::size_t k; (k = next.fetch_add(1)) < pending.size();) {
                        const auto i = pending[k];
                        if (options.on_start) options.on_start(group[i]);
                        group_results[i] = execute_run(group[i], seq, config, options.out, options.save_checkpoints);
                    }
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = pending.size();
                }
            };
            const int n = std::max(1, std::min<int>(options.workers, static_cast<int>(pending.size())));
            if (n == 1) {
                worker();
            } else {
                std::vector<std::thread> threads;
                for (int w = 0; w < n; ++w) threads.emplace_back(worker);
                for (auto& th : threads) th.join();
            }
            if (failure) std::rethrow_exception(failure);
        }
        for (auto& r : group_results) result.runs.push_back(std::move(r));
    }
    log::info("matrix: " + std::to_string(result.count(RunStatus::complete)) + " completed, " +
              std::to_string(result.count(RunStatus::skipped)) + " skipped, " +
              std::to_string(result.count(RunStatus::failed)) + " failed");
    return result;
}

}  // namespace replay_bench::runner
