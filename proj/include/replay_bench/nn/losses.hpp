#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "replay_bench/errors.hpp"
#include "replay_bench/nn/tensor.hpp"

namespace replay_bench::nn {

template <typename S>
struct LossAndGrad {
    S loss = S(0);
    MatrixT<S> grad;  // same shape as the loss input
};

template <typename S>
S softplus(S x) {
    return x > S(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename S>
S sigmoid(S x) {
    if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
    const S e = std::exp(x);
    return e / (S(1) + e);
}

template <typename S>
MatrixT<S> softmax(const MatrixT<S>& logits) {
    MatrixT<S> p(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const S m = logits.row(i).maxCoeff();
        p.row(i) = (logits.row(i).array() - m).exp().matrix();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

/// Mean over rows of -log softmax(logits)[label]; gradient (softmax - onehot) / batch.
template <typename S>
LossAndGrad<S> cross_entropy(const MatrixT<S>& logits, std::span<const int> labels) {
    const Eigen::Index batch = logits.rows();
    if (static_cast<std::size_t>(batch) != labels.size()) throw ArgumentError("cross_entropy: label count mismatch");
    LossAndGrad<S> out;
    out.grad.resize(batch, logits.cols());
    if (batch == 0) return out;
    double total = 0.0;
    for (Eigen::Index i = 0; i < batch; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= logits.cols()) throw ArgumentError("cross_entropy: label out of range");
        Eigen::Index top;
        const S m = logits.row(i).maxCoeff(&top);
        // log-sum-exp as m + log1p(sum over non-max terms) keeps tiny losses exact
        double rest = 0.0;
        for (Eigen::Index j = 0; j < logits.cols(); ++j)
            if (j != top) rest += std::exp(static_cast<double>(logits(i, j) - m));
        const double lse = static_cast<double>(m) + std::log1p(rest);
        total += lse - static_cast<double>(logits(i, y));
        for (Eigen::Index j = 0; j < logits.cols(); ++j)
            out.grad(i, j) = static_cast<S>(std::exp(static_cast<double>(logits(i, j)) - lse));
        out.grad(i, y) -= S(1);
    }
    out.grad /= static_cast<S>(batch);
    out.loss = static_cast<S>(total / static_cast<double>(batch));
    return out;
}

/// Bernoulli negative log-likelihood of `targets` under sigmoid(logits),
/// summed over columns and averaged over rows. Gradient is w.r.t. logits.
template <typename S>
LossAndGrad<S> binary_cross_entropy_with_logits(const MatrixT<S>& logits, const MatrixT<S>& targets) {
    if (logits.rows() != targets.rows() || logits.cols() != targets.cols())
        throw ArgumentError("binary_cross_entropy: shape mismatch");
    LossAndGrad<S> out;
    const Eigen::Index batch = logits.rows();
    out.grad.resize(batch, logits.cols());
    if (batch == 0) return out;
    double total = 0.0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        const S l = logits.data()[i];
        const S x = targets.data()[i];
        total += static_cast<double>(softplus(l) - x * l);
        out.grad.data()[i] = (sigmoid(l) - x) / static_cast<S>(batch);
    }
    out.loss = static_cast<S>(total / static_cast<double>(batch));
    return out;
}

}  // namespace replay_bench::nn
