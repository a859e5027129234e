#pragma once

#include <span>
#include <vector>

#include "replay_bench/nn/architecture.hpp"
#include "replay_bench/nn/losses.hpp"
#include "replay_bench/nn/network.hpp"

namespace replay_bench::nn {

template <typename S>
Network<S> make_classifier(Rng& rng, std::string_view tag = kClassifierTag) {
    return Network<S>::initialized(parse_architecture(tag), rng);
}

/// Logits for a batch; the network must have a linear output layer.
template <typename S>
MatrixT<S> classifier_forward(const Network<S>& net, const MatrixT<S>& batch) {
    if (net.architecture().output != Activation::identity)
        throw ArgumentError("classifier_forward: " + net.tag() + " is not a classifier architecture");
    return net.forward(batch);
}

template <typename S>
struct Gradients {
    S loss = S(0);
    Params<S> grads;
};

/// Mean cross-entropy over the batch and its exact parameter gradient.
template <typename S>
Gradients<S> classifier_gradients(const Network<S>& net, const MatrixT<S>& batch, std::span<const int> labels) {
    ForwardCache<S> cache;
    const MatrixT<S> logits = net.forward(batch, cache);
    auto ce = cross_entropy<S>(logits, labels);
    Gradients<S> out;
    out.loss = ce.loss;
    net.backward(cache, std::move(ce.grad), &out.grads, nullptr);
    return out;
}

template <typename S>
std::vector<int> predict(const Network<S>& net, const MatrixT<S>& batch) {
    return argmax_rows<S>(forward_chunked(net, batch));
}

}  // namespace replay_bench::nn
