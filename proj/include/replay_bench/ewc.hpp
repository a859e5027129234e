#pragma once

// Elastic weight consolidation: diagonal Fisher estimate and the quadratic
// anchor penalty.

#include <algorithm>
#include <string>
#include <vector>

#include "replay_bench/errors.hpp"
#include "replay_bench/nn/classifier.hpp"
#include "replay_bench/nn/losses.hpp"
#include "replay_bench/nn/network.hpp"
#include "replay_bench/random.hpp"

namespace replay_bench::ewc {

using nn::Network;
using nn::Params;

template <typename S>
struct FisherDiag {
    Params<S> values;
    std::size_t sample_count = 0;
};

template <typename S>
struct EwcAnchor {
    Params<S> anchor;  // parameters at the end of the sub-task
    FisherDiag<S> fisher;
    double lambda = 0.0;
};

enum class FisherLabels {
    sampled,   // one label per input drawn from the model's predictive distribution
    expected,  // exact expectation over labels under the predictive distribution
};

enum class ConsolidationPolicy { sum_fisher, keep_all, keep_last };

inline std::string to_string(ConsolidationPolicy p) {
    switch (p) {
        case ConsolidationPolicy::sum_fisher: return "sum_fisher";
        case ConsolidationPolicy::keep_all: return "keep_all";
        case ConsolidationPolicy::keep_last: return "keep_last";
    }
    return "?";
}

inline ConsolidationPolicy parse_policy(std::string_view s) {
    if (s == "sum_fisher") return ConsolidationPolicy::sum_fisher;
    if (s == "keep_all") return ConsolidationPolicy::keep_all;
    if (s == "keep_last") return ConsolidationPolicy::keep_last;
    throw ArgumentError("unknown consolidation policy '" + std::string(s) + "'");
}

/// F_i = mean over inputs of (d log p(y|x) / d theta_i)^2 with y taken from
/// the model itself, never from the data. `n_samples` inputs are drawn
/// without replacement from `inputs`.
template <typename S>
FisherDiag<S> estimate_fisher_diagonal(const Network<S>& net, const MatrixT<S>& inputs, std::size_t n_samples,
                                       Rng& rng, FisherLabels mode = FisherLabels::sampled) {
    if (inputs.rows() == 0) throw ArgumentError("estimate_fisher_diagonal: empty dataset");
    if (n_samples == 0) throw ArgumentError("estimate_fisher_diagonal: n_samples must be positive");
    if (n_samples > static_cast<std::size_t>(inputs.rows()))
        throw ArgumentError("estimate_fisher_diagonal: n_samples exceeds dataset size");

    auto order = shuffled_indices(static_cast<std::size_t>(inputs.rows()), rng);
    order.resize(n_samples);

    FisherDiag<S> fisher;
    fisher.values = nn::zeros_like(net.params());
    fisher.sample_count = n_samples;
    Params<S> grads;
    nn::ForwardCache<S> cache;
    for (std::size_t idx : order) {
        const MatrixT<S> x = inputs.row(static_cast<Eigen::Index>(idx));
        const MatrixT<S> logits = net.forward(x, cache);
        const MatrixT<S> probs = nn::softmax<S>(logits);
        auto accumulate = [&](int label, S weight) {
            // d(-log p(label|x)) / d logits = probs - onehot; squaring drops the sign
            MatrixT<S> delta = probs;
            delta(0, label) -= S(1);
            net.backward(cache, delta, &grads, nullptr);
            for (std::size_t l = 0; l < grads.size(); ++l) {
                fisher.values[l].weight.array() += weight * grads[l].weight.array().square();
                fisher.values[l].bias.array() += weight * grads[l].bias.array().square();
            }
        };
        if (mode == FisherLabels::sampled) {
            std::vector<double> p(static_cast<std::size_t>(probs.cols()));
            for (Eigen::Index j = 0; j < probs.cols(); ++j) p[static_cast<std::size_t>(j)] = probs(0, j);
            accumulate(static_cast<int>(rng.categorical(p)), S(1));
        } else {
            for (Eigen::Index j = 0; j < probs.cols(); ++j)
                if (probs(0, j) > S(0)) accumulate(static_cast<int>(j), probs(0, j));
        }
    }
    const S inv = S(1) / static_cast<S>(n_samples);
    for (auto& l : fisher.values) {
        l.weight *= inv;
        l.bias *= inv;
    }
    return fisher;
}

template <typename S>
struct Penalty {
    S value = S(0);
    Params<S> grad;
};

/// (lambda / 2) * sum_i F_i (theta_i - anchor_i)^2 and its gradient
/// lambda * F * (theta - anchor).
template <typename S>
Penalty<S> ewc_penalty(const Params<S>& params, const EwcAnchor<S>& anchor) {
    if (params.size() != anchor.anchor.size() || params.size() != anchor.fisher.values.size())
        throw ArgumentError("ewc_penalty: parameter structure differs from anchor");
    Penalty<S> out;
    out.grad = nn::zeros_like(params);
    const S lambda = static_cast<S>(anchor.lambda);
    double total = 0.0;
    auto term = [&](const auto& theta, const auto& star, const auto& f, auto& g) {
        if (theta.rows() != star.rows() || theta.cols() != star.cols() || f.rows() != theta.rows() ||
            f.cols() != theta.cols())
            throw ArgumentError("ewc_penalty: shape mismatch");
        const auto diff = (theta - star).eval();
        total += static_cast<double>((f.array() * diff.array().square()).sum());
        g = lambda * f.cwiseProduct(diff);
    };
    for (std::size_t l = 0; l < params.size(); ++l) {
        term(params[l].weight, anchor.anchor[l].weight, anchor.fisher.values[l].weight, out.grad[l].weight);
        term(params[l].bias, anchor.anchor[l].bias, anchor.fisher.values[l].bias, out.grad[l].bias);
    }
    out.value = static_cast<S>(0.5 * anchor.lambda * total);
    return out;
}

/// Anchors retained across sub-tasks under one consolidation policy.
template <typename S>
struct AnchorSet {
    ConsolidationPolicy policy = ConsolidationPolicy::sum_fisher;
    std::vector<EwcAnchor<S>> anchors;

    bool empty() const { return anchors.empty(); }
};

template <typename S>
AnchorSet<S> consolidate(AnchorSet<S> existing, EwcAnchor<S> next) {
    switch (existing.policy) {
        case ConsolidationPolicy::keep_all:
            existing.anchors.push_back(std::move(next));
            break;
        case ConsolidationPolicy::keep_last:
            existing.anchors.assign(1, std::move(next));
            break;
        case ConsolidationPolicy::sum_fisher:
            if (!existing.anchors.empty()) {
                const auto& prev = existing.anchors.front().fisher;
                nn::add_scaled(next.fisher.values, prev.values);
                next.fisher.sample_count += prev.sample_count;
            }
            existing.anchors.assign(1, std::move(next));
            break;
    }
    return existing;
}

/// Sum of ewc_penalty over every retained anchor.
template <typename S>
Penalty<S> total_penalty(const Params<S>& params, const AnchorSet<S>& set) {
    Penalty<S> out;
    out.grad = nn::zeros_like(params);
    for (const auto& a : set.anchors) {
        auto p = ewc_penalty(params, a);
        out.value += p.value;
        nn::add_scaled(out.grad, p.grad);
    }
    return out;
}

}  // namespace replay_bench::ewc
