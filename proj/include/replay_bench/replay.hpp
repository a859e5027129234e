#pragma once

// Replay budgets and replay-set construction for marginal and conditional
// generative replay.

#include <cmath>
#include <concepts>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "replay_bench/data.hpp"
#include "replay_bench/errors.hpp"
#include "replay_bench/generative.hpp"
#include "replay_bench/nn/classifier.hpp"
#include "replay_bench/random.hpp"

namespace replay_bench::replay {

using data::LabeledDataset;

enum class Schedule { balanced, constant, scaled };

inline std::string to_string(Schedule s) {
    switch (s) {
        case Schedule::balanced: return "balanced";
        case Schedule::constant: return "constant";
        case Schedule::scaled: return "scaled";
    }
    return "?";
}

inline Schedule parse_schedule(std::string_view s) {
    if (s == "balanced") return Schedule::balanced;
    if (s == "constant") return Schedule::constant;
    if (s == "scaled") return Schedule::scaled;
    throw ArgumentError("unknown budget schedule '" + std::string(s) + "' (balanced, constant, scaled)");
}

struct ReplayBudget {
    Schedule schedule = Schedule::balanced;
    std::size_t base_n = 6000;
    double alpha = 0.1;

    void validate() const {
        if (base_n < 1) throw ArgumentError("replay budget N must be at least 1");
        if (!(alpha > 0.0 && alpha <= 1.0)) throw ArgumentError("replay budget alpha must lie in (0, 1]");
    }
};

/// Generated samples mixed into sub-task t:
///   balanced  t * N
///   constant  N once a generator exists (0 at t = 0)
///   scaled    round(alpha * t * N)
inline std::size_t budget_count(const ReplayBudget& budget, int t) {
    if (t < 0) throw ArgumentError("budget_count: negative sub-task index");
    const auto ut = static_cast<std::size_t>(t);
    switch (budget.schedule) {
        case Schedule::balanced: return ut * budget.base_n;
        case Schedule::constant: return t == 0 ? 0 : budget.base_n;
        case Schedule::scaled:
            return static_cast<std::size_t>(std::llround(budget.alpha * static_cast<double>(ut) *
                                                         static_cast<double>(budget.base_n)));
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Generator / labeler interfaces. Test doubles satisfy the same concepts.

template <typename G>
concept MarginalSource = requires(const G& g, std::size_t n, Rng& rng) {
    { g.sample(n, rng) } -> std::convertible_to<Matrix>;
};

template <typename G>
concept ConditionalSource = requires(const G& g, int c, std::size_t n, Rng& rng) {
    { g.sample_class(c, n, rng) } -> std::convertible_to<Matrix>;
};

template <typename C>
concept Labeler = requires(const C& c, const Matrix& x) {
    { c.predict(x) } -> std::convertible_to<std::vector<int>>;
};

/// Read-only view of a trained generative model.
struct FrozenGenerator {
    std::shared_ptr<const gen::GenerativeModel<float>> model;

    Matrix sample(std::size_t n, Rng& rng) const { return gen::sample_marginal(*model, n, rng); }
    Matrix sample_class(int c, std::size_t n, Rng& rng) const {
        return gen::sample_conditional(*model, c, n, rng).images;
    }
};

struct FrozenClassifier {
    std::shared_ptr<const nn::Network<float>> network;

    std::vector<int> predict(const Matrix& x) const { return nn::predict(*network, x); }
};

/// G_{t-1} and, for marginal replay, C_{t-1}. Both are immutable snapshots.
struct FrozenPair {
    std::optional<FrozenGenerator> generator;
    std::optional<FrozenClassifier> classifier;
};

/// Generated images labelled by the frozen classifier's argmax. The
/// generator's own notion of class is never consulted.
template <MarginalSource G, Labeler C>
LabeledDataset build_marginal_replay_set(const G& generator, const C* classifier, std::size_t count, Rng& rng,
                                         int num_classes = 10) {
    if (!classifier) throw ProtocolError("marginal replay needs a frozen classifier to label generated samples");
    LabeledDataset out;
    out.num_classes = num_classes;
    if (count == 0) return out;
    out.images = generator.sample(count, rng);
    out.labels = classifier->predict(out.images);
    return out;
}

inline LabeledDataset build_marginal_replay_set(const FrozenPair& frozen, std::size_t count, Rng& rng,
                                                int num_classes = 10) {
    if (!frozen.generator) throw ProtocolError("marginal replay needs a frozen generator");
    return build_marginal_replay_set(*frozen.generator, frozen.classifier ? &*frozen.classifier : nullptr, count, rng,
                                     num_classes);
}

/// floor(count / k) per class; the remainder goes one each to the first
/// classes in the given order.
inline std::vector<std::size_t> conditional_allocation(std::size_t count, std::size_t num_classes) {
    if (count > 0 && num_classes == 0) throw ProtocolError("conditional replay requested with no classes seen");
    std::vector<std::size_t> alloc(num_classes, num_classes ? count / num_classes : 0);
    for (std::size_t i = 0; i < (num_classes ? count % num_classes : 0); ++i) ++alloc[i];
    return alloc;
}

/// Class-balanced generated set; labels are attached by construction.
template <ConditionalSource G>
LabeledDataset build_conditional_replay_set(const G& generator, std::span<const int> classes_seen, std::size_t count,
                                            Rng& rng, int num_classes = 10) {
    const auto alloc = conditional_allocation(count, classes_seen.size());
    LabeledDataset out;
    out.num_classes = num_classes;
    if (count == 0) return out;
    for (std::size_t i = 0; i < classes_seen.size(); ++i) {
        if (alloc[i] == 0) continue;
        LabeledDataset part;
        part.num_classes = num_classes;
        part.images = generator.sample_class(classes_seen[i], alloc[i], rng);
        part.labels.assign(alloc[i], classes_seen[i]);
        out = data::concatenate(out, part);
    }
    return out;
}

/// New data plus replay, in one seeded random order.
inline LabeledDataset merge_training_set(const LabeledDataset& new_data, const LabeledDataset& replay, Rng& rng) {
    const auto merged = data::concatenate(new_data, replay);
    const auto order = shuffled_indices(merged.size(), rng);
    return merged.subset(order);
}

/// Class mixture an idealized marginal generator would produce after
/// sub-task t of a one-class-per-sub-task sequence: G_t reproduces exactly
/// the mixture it was trained on, i.e. N samples of class t plus
/// budget_count(t) samples distributed as p_{t-1}.
inline std::vector<double> ideal_class_distribution(const ReplayBudget& budget, int t) {
    if (t < 0) throw ArgumentError("ideal_class_distribution: negative sub-task index");
    std::vector<double> p{1.0};
    const double n_new = static_cast<double>(budget.base_n);
    for (int s = 1; s <= t; ++s) {
        const double replayed = static_cast<double>(budget_count(budget, s));
        const double total = n_new + replayed;
        for (double& v : p) v *= replayed / total;
        p.push_back(n_new / total);
    }
    return p;
}

}  // namespace replay_bench::replay
