#pragma once

#include <cmath>
#include <cstdint>

#include "replay_bench/errors.hpp"
#include "replay_bench/nn/network.hpp"

namespace replay_bench::nn {

/// Raised when a loss or gradient stops being finite.
class NumericError : public Error {
public:
    using Error::Error;
};

struct AdamHyper {
    double lr = 0.01;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename S>
struct AdamState {
    AdamHyper hyper;
    Params<S> m;
    Params<S> v;
    std::uint64_t step = 0;

    AdamState() = default;
    explicit AdamState(AdamHyper h) : hyper(h) {}

    void reset() {
        m.clear();
        v.clear();
        step = 0;
    }
};

/// Bias-corrected Adam update, in place.
template <typename S>
void adam_step(Params<S>& params, const Params<S>& grads, AdamState<S>& state) {
    if (grads.size() != params.size()) throw ArgumentError("adam_step: gradient/parameter layer count differs");
    for (std::size_t l = 0; l < params.size(); ++l) {
        if (grads[l].weight.rows() != params[l].weight.rows() || grads[l].weight.cols() != params[l].weight.cols() ||
            grads[l].bias.size() != params[l].bias.size())
            throw ArgumentError("adam_step: gradient shape differs from parameter shape");
    }
    if (!all_finite(grads)) throw NumericError("non-finite gradient");
    if (state.m.empty()) {
        state.m = zeros_like(params);
        state.v = zeros_like(params);
    }
    ++state.step;
    const auto& h = state.hyper;
    const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
    const S b1 = static_cast<S>(h.beta1);
    const S b2 = static_cast<S>(h.beta2);
    const S step_size = static_cast<S>(h.lr / c1);
    const S inv_c2 = static_cast<S>(1.0 / c2);
    const S eps = static_cast<S>(h.eps);
    auto update = [&](auto& theta, const auto& g, auto& m, auto& v) {
        m = b1 * m + (S(1) - b1) * g;
        v = b2 * v + (S(1) - b2) * g.cwiseProduct(g);
        theta.array() -= step_size * m.array() / ((v.array() * inv_c2).sqrt() + eps);
    };
    for (std::size_t l = 0; l < params.size(); ++l) {
        update(params[l].weight, grads[l].weight, state.m[l].weight, state.v[l].weight);
        update(params[l].bias, grads[l].bias, state.m[l].bias, state.v[l].bias);
    }
}

}  // namespace replay_bench::nn
