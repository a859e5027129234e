#pragma once

// Continual training loop: one classifier (and, for replay strategies, one
// generator) trained sub-task by sub-task, with frozen copies of the
// previous sub-task's models supplying replay.

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "replay_bench/clt.hpp"
#include "replay_bench/config.hpp"
#include "replay_bench/errors.hpp"
#include "replay_bench/ewc.hpp"
#include "replay_bench/generative.hpp"
#include "replay_bench/log.hpp"
#include "replay_bench/metrics.hpp"
#include "replay_bench/nn/adam.hpp"
#include "replay_bench/nn/classifier.hpp"
#include "replay_bench/random.hpp"
#include "replay_bench/replay.hpp"

namespace replay_bench::train {

using data::LabeledDataset;
using metrics::MetricLog;
using metrics::MetricRecord;

struct RunState {
    int t = 0;  // index of the next sub-task to train
    nn::Network<float> classifier;
    std::optional<gen::GenerativeModel<float>> generator;
    replay::FrozenPair frozen;
    ewc::AnchorSet<float> anchors;
    std::vector<int> classes_seen;  // ascending
    LabeledDataset last_replay;     // replay set used for the most recent sub-task

    /// Checksum over the frozen pair (0 when empty).
    std::uint64_t frozen_checksum() const {
        std::uint64_t h = 0;
        if (frozen.generator) h ^= frozen.generator->model->checksum();
        if (frozen.classifier) h ^= nn::checksum(frozen.classifier->network->params()) * 0x100000001b3ULL;
        return h;
    }
};

/// Random streams of one run, each derived from the run seed by purpose so
/// that strategies sharing a seed also share their data order.
struct Streams {
    std::uint64_t seed = 0;

    Rng classifier_init(int t = -1) const {
        return t < 0 ? Rng(derive_seed(seed, "classifier-init"))
                     : Rng(derive_seed(seed, "classifier-init", static_cast<std::uint64_t>(t)));
    }
    Rng generator_init(int t = -1) const {
        return t < 0 ? Rng(derive_seed(seed, "generator-init"))
                     : Rng(derive_seed(seed, "generator-init", static_cast<std::uint64_t>(t)));
    }
    Rng replay(int t) const { return Rng(derive_seed(seed, "replay", static_cast<std::uint64_t>(t))); }
    Rng merge(int t) const { return Rng(derive_seed(seed, "merge", static_cast<std::uint64_t>(t))); }
    Rng batch_order(int t) const { return Rng(derive_seed(seed, "batch-order", static_cast<std::uint64_t>(t))); }
    Rng generator_noise(int t) const {
        return Rng(derive_seed(seed, "generator-noise", static_cast<std::uint64_t>(t)));
    }
    Rng fisher(int t) const { return Rng(derive_seed(seed, "fisher", static_cast<std::uint64_t>(t))); }
};

inline RunState initial_state(const Strategy& strategy, const RunConfig& config, std::uint64_t seed) {
    strategy.validate();
    const Streams streams{seed};
    RunState s;
    auto crng = streams.classifier_init();
    s.classifier = nn::make_classifier<float>(crng, config.classifier_tag);
    if (is_replay(strategy.kind)) {
        auto grng = streams.generator_init();
        s.generator = gen::make_generative_model<float>(generator_kind(strategy.kind), config.generative, grng);
    }
    if (strategy.ewc) s.anchors.policy = strategy.ewc->policy;
    return s;
}

/// Replay set for the state's current sub-task; empty at t = 0.
inline LabeledDataset build_replay_set(const RunState& state, const Strategy& strategy, Rng& rng) {
    LabeledDataset empty;
    empty.num_classes = state.classifier.output_dim();
    if (!is_replay(strategy.kind)) return empty;
    const std::size_t count = replay::budget_count(*strategy.budget, state.t);
    if (state.t == 0 || count == 0) return empty;
    if (!state.frozen.generator) throw ProtocolError("replay at sub-task " + std::to_string(state.t) +
                                                     " without a frozen generator");
    if (is_marginal(strategy.kind))
        return replay::build_marginal_replay_set(state.frozen, count, rng, empty.num_classes);
    return replay::build_conditional_replay_set(*state.frozen.generator, std::span<const int>(state.classes_seen),
                                                count, rng, empty.num_classes);
}

struct EpochReport {
    int subtask = 0;
    int epoch = 0;  // 1-based within the sub-task
    double cls_loss = 0.0;
    std::optional<double> gen_loss;
    const RunState* state = nullptr;
};

using EpochHook = std::function<void(const EpochReport&)>;

namespace detail {

inline void gather_batch(const LabeledDataset& ds, std::span<const std::size_t> order, std::size_t begin,
                         std::size_t end, Matrix& x, std::vector<int>& y) {
    const auto n = static_cast<Eigen::Index>(end - begin);
    x.resize(n, ds.images.cols());
    y.resize(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
        x.row(static_cast<Eigen::Index>(i - begin)) = ds.images.row(static_cast<Eigen::Index>(order[i]));
        y[i - begin] = ds.labels[order[i]];
    }
}

}  // namespace detail

/// Trains sub-task `sub_task` (which must be the state's next one) and
/// advances the state past it. `on_epoch` fires every `eval_every` epochs.
inline void train_subtask(RunState& state, const clt::SubTask& sub_task, const Strategy& strategy,
                          const RunConfig& config, const Streams& streams, const EpochHook& on_epoch = {}) {
    if (sub_task.index != state.t)
        throw ProtocolError("train_subtask: expected sub-task " + std::to_string(state.t) + ", got " +
                            std::to_string(sub_task.index));
    if (sub_task.train.empty()) throw ArgumentError("sub-task " + std::to_string(state.t) + " has no training data");
    const int t = state.t;
    const std::string label = strategy.label();
    int epoch = 0;
    try {
        if (!config.warm_start && t > 0) {
            auto crng = streams.classifier_init(t);
            state.classifier = nn::make_classifier<float>(crng, config.classifier_tag);
            if (state.generator) {
                auto grng = streams.generator_init(t);
                state.generator = gen::make_generative_model<float>(state.generator->kind, config.generative, grng);
            }
        }

        auto replay_rng = streams.replay(t);
        state.last_replay = build_replay_set(state, strategy, replay_rng);
        auto merge_rng = streams.merge(t);
        const LabeledDataset train_set = replay::merge_training_set(sub_task.train, state.last_replay, merge_rng);

        nn::AdamState<float> cls_opt(config.classifier_adam);
        gen::GenerativeOptimizer<float> gen_opt(config.generative.adam);
        auto order_rng = streams.batch_order(t);
        auto noise_rng = streams.generator_noise(t);
        const auto B = static_cast<std::size_t>(config.batch_size);
        std::vector<std::size_t> order(train_set.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Matrix x;
        std::vector<int> y;

        for (epoch = 1; epoch <= config.epochs_per_subtask; ++epoch) {
            order_rng.shuffle(std::span<std::size_t>(order));

            double cls_sum = 0.0;
            std::size_t cls_batches = 0;
            for (std::size_t b = 0; b < order.size(); b += B) {
                detail::gather_batch(train_set, order, b, std::min(order.size(), b + B), x, y);
                auto g = nn::classifier_gradients<float>(state.classifier, x, y);
                double loss = g.loss;
                if (!state.anchors.empty()) {
                    auto pen = ewc::total_penalty(state.classifier.params(), state.anchors);
                    nn::add_scaled(g.grads, pen.grad);
                    loss += pen.value;
                }
                if (!std::isfinite(loss)) throw nn::NumericError("non-finite classifier loss");
                nn::adam_step(state.classifier.params(), g.grads, cls_opt);
                cls_sum += loss;
                ++cls_batches;
            }

            std::optional<double> gen_loss;
            if (state.generator) {
                double gen_sum = 0.0;
                std::size_t gen_count = 0;
                for (std::size_t b = 0; b < order.size(); b += B) {
                    detail::gather_batch(train_set, order, b, std::min(order.size(), b + B), x, y);
                    auto stats = gen::generator_train_step(*state.generator, x, y, noise_rng, gen_opt, config.generative);
                    if (stats.generator_loss) {
                        gen_sum += *stats.generator_loss;
                        ++gen_count;
                    }
                }
                if (gen_count) gen_loss = gen_sum / static_cast<double>(gen_count);
            }

            if (on_epoch && epoch % config.eval_every == 0)
                on_epoch({t, epoch, cls_sum / static_cast<double>(cls_batches), gen_loss, &state});
        }
        epoch = config.epochs_per_subtask;

        if (strategy.ewc) {
            auto frng = streams.fisher(t);
            const std::size_t n = std::min(strategy.ewc->fisher_samples, sub_task.train.size());
            auto fisher = ewc::estimate_fisher_diagonal(state.classifier, sub_task.train.images, n, frng,
                                                        strategy.ewc->labels);
            state.anchors = ewc::consolidate(
                std::move(state.anchors), ewc::EwcAnchor<float>{state.classifier.params(), std::move(fisher),
                                                                strategy.ewc->lambda});
        }
        if (state.generator) {
            state.frozen.generator = replay::FrozenGenerator{
                std::make_shared<const gen::GenerativeModel<float>>(*state.generator)};
            if (is_marginal(strategy.kind))
                state.frozen.classifier =
                    replay::FrozenClassifier{std::make_shared<const nn::Network<float>>(state.classifier)};
        }
    } catch (const TrainingError&) {
        throw;
    } catch (const nn::NumericError& e) {
        throw TrainingError(label, t, epoch, e.what());
    }

    std::set<int> seen(state.classes_seen.begin(), state.classes_seen.end());
    for (int c : sub_task.classes()) seen.insert(c);
    state.classes_seen.assign(seen.begin(), seen.end());
    ++state.t;
}

/// Failure inside run_continual; carries every record logged before it.
class RunError : public TrainingError {
public:
    RunError(std::string strategy, int subtask, int epoch, const std::string& what, MetricLog partial)
        : TrainingError(std::move(strategy), subtask, epoch, what), partial_(std::move(partial)) {}

    const MetricLog& partial_log() const noexcept { return partial_; }

private:
    MetricLog partial_;
};

struct RunHooks {
    std::function<void(const MetricRecord&)> on_record;
    /// Called after each sub-task with the advanced state.
    std::function<void(const RunState&)> on_subtask_end;
};

struct RunOutcome {
    MetricLog log;
    RunState state;
};

inline RunOutcome run_continual_with_state(const Strategy& strategy, const clt::TaskSequence& sequence,
                                           const RunConfig& config, std::uint64_t seed, const RunHooks& hooks = {}) {
    config.validate();
    strategy.validate();
    if (sequence.sub_tasks.empty()) throw ArgumentError("run_continual: empty task sequence");
    const std::string label = strategy.label();
    const std::string clt_name = clt::to_string(sequence.kind);
    const Streams streams{seed};
    const LabeledDataset whole = sequence.whole_test_set();
    const auto first_count = static_cast<Eigen::Index>(sequence.sub_tasks.front().test.size());

    RunOutcome out;
    out.state = initial_state(strategy, config, seed);
    auto on_epoch = [&](const EpochReport& r) {
        const auto pred = nn::predict(r.state->classifier, whole.images);
        std::size_t whole_ok = 0, first_ok = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const bool ok = pred[i] == whole.labels[i];
            whole_ok += ok;
            if (static_cast<Eigen::Index>(i) < first_count) first_ok += ok;
        }
        MetricRecord rec;
        rec.strategy = label;
        rec.clt = clt_name;
        rec.seed = seed;
        rec.subtask = r.subtask;
        rec.epoch = r.epoch;
        rec.whole_acc = static_cast<double>(whole_ok) / static_cast<double>(whole.size());
        rec.first_acc = first_count ? static_cast<double>(first_ok) / static_cast<double>(first_count) : 0.0;
        rec.cls_loss = r.cls_loss;
        if (r.gen_loss) rec.gen_loss = *r.gen_loss;
        const auto hist = metrics::replay_histogram(r.state->last_replay, metrics::kHistogramClasses);
        std::copy(hist.begin(), hist.end(), rec.hist.begin());
        out.log.records.push_back(rec);
        if (hooks.on_record) hooks.on_record(rec);
    };

    for (const auto& st : sequence.sub_tasks) {
        log::info("[" + label + " " + clt_name + " seed " + std::to_string(seed) + "] sub-task " +
                  std::to_string(st.index + 1) + "/" + std::to_string(sequence.size()));
        try {
            train_subtask(out.state, st, strategy, config, streams, on_epoch);
        } catch (const TrainingError& e) {
            throw RunError(e.strategy(), e.subtask(), e.epoch(), e.what(), out.log);
        } catch (const Error& e) {
            throw RunError(label, st.index, 0, e.what(), out.log);
        }
        if (hooks.on_subtask_end) hooks.on_subtask_end(out.state);
    }
    return out;
}

inline MetricLog run_continual(const Strategy& strategy, const clt::TaskSequence& sequence, const RunConfig& config,
                               std::uint64_t seed, const RunHooks& hooks = {}) {
    return run_continual_with_state(strategy, sequence, config, seed, hooks).log;
}

// ---------------------------------------------------------------------------
// EWC lambda sweep: permutation sequence scored on held-out validation data.

struct SweepPoint {
    double lambda = 0.0;
    double final_whole_acc = 0.0;
    double final_first_acc = 0.0;
};

inline std::vector<SweepPoint> ewc_lambda_sweep(std::span<const double> lambdas, const LabeledDataset& train,
                                                const LabeledDataset& validation, const RunConfig& config,
                                                std::uint64_t seed) {
    const auto seq = clt::build(clt::CltKind::permutations, train, validation, config.num_subtasks, seed);
    std::vector<SweepPoint> out;
    for (double lambda : lambdas) {
        EwcConfig ec = config.ewc;
        ec.lambda = lambda;
        const auto log = run_continual(Strategy::make(StrategyKind::ewc, config.budget, ec), seq, config, seed);
        out.push_back({lambda, log.back().whole_acc, log.back().first_acc});
    }
    return out;
}

}  // namespace replay_bench::train
