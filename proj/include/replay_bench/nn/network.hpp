#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "replay_bench/errors.hpp"
#include "replay_bench/nn/architecture.hpp"
#include "replay_bench/nn/tensor.hpp"
#include "replay_bench/random.hpp"

namespace replay_bench::nn {

template <typename S>
struct Layer {
    MatrixT<S> weight;  // fan_in x fan_out
    RowVectorT<S> bias;  // fan_out
};

/// Ordered parameter arrays of one network; also the shape of its gradients.
template <typename S>
using Params = std::vector<Layer<S>>;

template <typename S>
Params<S> zeros_like(const Params<S>& p) {
    Params<S> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        out[i].weight = MatrixT<S>::Zero(p[i].weight.rows(), p[i].weight.cols());
        out[i].bias = RowVectorT<S>::Zero(p[i].bias.size());
    }
    return out;
}

/// a += scale * b
template <typename S>
void add_scaled(Params<S>& a, const Params<S>& b, S scale = S(1)) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i].weight.noalias() += scale * b[i].weight;
        a[i].bias.noalias() += scale * b[i].bias;
    }
}

template <typename S>
std::size_t parameter_count(const Params<S>& p) {
    std::size_t n = 0;
    for (const auto& l : p) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

template <typename S>
bool all_finite(const Params<S>& p) {
    for (const auto& l : p)
        if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
}

/// Visits every scalar in a fixed order (layer by layer, weight then bias).
template <typename S, typename F>
void for_each_scalar(Params<S>& p, F&& fn) {
    for (auto& l : p) {
        for (Eigen::Index i = 0; i < l.weight.size(); ++i) fn(l.weight.data()[i]);
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) fn(l.bias.data()[i]);
    }
}

template <typename S, typename F>
void for_each_scalar(const Params<S>& p, F&& fn) {
    for (const auto& l : p) {
        for (Eigen::Index i = 0; i < l.weight.size(); ++i) fn(l.weight.data()[i]);
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) fn(l.bias.data()[i]);
    }
}

/// Reference to the k-th scalar in for_each_scalar order.
template <typename S>
S& scalar_at(Params<S>& p, std::size_t k) {
    for (auto& l : p) {
        const auto nw = static_cast<std::size_t>(l.weight.size());
        if (k < nw) return l.weight.data()[k];
        k -= nw;
        const auto nb = static_cast<std::size_t>(l.bias.size());
        if (k < nb) return l.bias.data()[k];
        k -= nb;
    }
    throw ArgumentError("parameter index out of range");
}

template <typename S>
S scalar_at(const Params<S>& p, std::size_t k) {
    return scalar_at(const_cast<Params<S>&>(p), k);
}

/// FNV-1a over the raw bytes of every parameter.
template <typename S>
std::uint64_t checksum(const Params<S>& p) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for_each_scalar(p, [&](S v) {
        unsigned char bytes[sizeof(S)];
        std::memcpy(bytes, &v, sizeof(S));
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 0x100000001b3ULL;
        }
    });
    return h;
}

template <typename To, typename From>
Params<To> cast_params(const Params<From>& p) {
    Params<To> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        out[i].weight = p[i].weight.template cast<To>();
        out[i].bias = p[i].bias.template cast<To>();
    }
    return out;
}

/// Activations saved by a forward pass for the backward pass.
template <typename S>
struct ForwardCache {
    std::vector<MatrixT<S>> inputs;  // input of each layer
    std::vector<MatrixT<S>> pre;     // pre-activation of each layer

    const MatrixT<S>& logits() const { return pre.back(); }
};

template <typename S>
void activate(Activation a, double slope, MatrixT<S>& m) {
    switch (a) {
        case Activation::identity: break;
        case Activation::relu: m = m.cwiseMax(S(0)); break;
        case Activation::leaky_relu: m = m.unaryExpr([s = S(slope)](S v) { return v > S(0) ? v : s * v; }); break;
        case Activation::sigmoid:
            m = m.unaryExpr([](S v) {
                if (v >= S(0)) return S(1) / (S(1) + std::exp(-v));
                const S e = std::exp(v);
                return e / (S(1) + e);
            });
            break;
    }
}

/// Derivative of a piecewise-linear activation evaluated at `pre`.
template <typename S>
MatrixT<S> activation_slope(Activation a, double slope, const MatrixT<S>& pre) {
    switch (a) {
        case Activation::identity: return MatrixT<S>::Ones(pre.rows(), pre.cols());
        case Activation::relu: return pre.unaryExpr([](S v) { return v > S(0) ? S(1) : S(0); });
        case Activation::leaky_relu: return pre.unaryExpr([s = S(slope)](S v) { return v > S(0) ? S(1) : s; });
        case Activation::sigmoid: break;
    }
    throw ArgumentError("activation_slope: sigmoid is only used at the output");
}

template <typename S>
class Network {
public:
    Network() = default;
    explicit Network(Architecture arch) : arch_(std::move(arch)) {
        for (std::size_t l = 0; l < arch_.num_layers(); ++l) {
            Layer<S> layer;
            layer.weight = MatrixT<S>::Zero(arch_.widths[l], arch_.widths[l + 1]);
            layer.bias = RowVectorT<S>::Zero(arch_.widths[l + 1]);
            params_.push_back(std::move(layer));
        }
    }

    /// Weights uniform in +-sqrt(6 / fan_in), biases zero.
    static Network initialized(Architecture arch, Rng& rng) {
        Network net(std::move(arch));
        for (auto& layer : net.params_) {
            const double bound = std::sqrt(6.0 / static_cast<double>(layer.weight.rows()));
            for (Eigen::Index i = 0; i < layer.weight.size(); ++i)
                layer.weight.data()[i] = static_cast<S>(rng.uniform(-bound, bound));
        }
        return net;
    }

    const Architecture& architecture() const { return arch_; }
    const std::string& tag() const { return arch_.tag; }
    Params<S>& params() { return params_; }
    const Params<S>& params() const { return params_; }
    int input_dim() const { return arch_.input_dim(); }
    int output_dim() const { return arch_.output_dim(); }

    MatrixT<S> forward(const MatrixT<S>& x) const {
        check_input(x);
        MatrixT<S> a = map_input(x);
        for (std::size_t l = 0; l < params_.size(); ++l) {
            MatrixT<S> z = a * params_[l].weight;
            z.rowwise() += params_[l].bias;
            activate(l + 1 == params_.size() ? arch_.output : arch_.hidden, arch_.leaky_slope, z);
            a = std::move(z);
        }
        return a;
    }

    MatrixT<S> forward(const MatrixT<S>& x, ForwardCache<S>& cache) const {
        check_input(x);
        cache.inputs.assign(params_.size(), {});
        cache.pre.assign(params_.size(), {});
        MatrixT<S> a = map_input(x);
        for (std::size_t l = 0; l < params_.size(); ++l) {
            cache.inputs[l] = std::move(a);
            cache.pre[l].noalias() = cache.inputs[l] * params_[l].weight;
            cache.pre[l].rowwise() += params_[l].bias;
            a = cache.pre[l];
            activate(l + 1 == params_.size() ? arch_.output : arch_.hidden, arch_.leaky_slope, a);
        }
        return a;
    }

    /// `delta` is the loss gradient with respect to the last layer's
    /// pre-activation. Writes parameter gradients into *grads (when given)
    /// and the gradient with respect to the network input into *input_grad.
    void backward(const ForwardCache<S>& cache, MatrixT<S> delta, Params<S>* grads, MatrixT<S>* input_grad) const {
        if (grads) grads->resize(params_.size());
        for (std::size_t l = params_.size(); l-- > 0;) {
            if (grads) {
                (*grads)[l].weight.noalias() = cache.inputs[l].transpose() * delta;
                (*grads)[l].bias = delta.colwise().sum();
            }
            if (l == 0 && !input_grad) break;
            MatrixT<S> upstream = delta * params_[l].weight.transpose();
            if (l == 0) {
                if (arch_.input_scale != 1.0) upstream *= static_cast<S>(arch_.input_scale);
                *input_grad = std::move(upstream);
                break;
            }
            delta = upstream.cwiseProduct(activation_slope(arch_.hidden, arch_.leaky_slope, cache.pre[l - 1]));
        }
    }

    template <typename To>
    Network<To> cast() const {
        Network<To> out(arch_);
        out.params() = cast_params<To>(params_);
        return out;
    }

private:
    MatrixT<S> map_input(const MatrixT<S>& x) const {
        if (!arch_.maps_input()) return x;
        return (x.array() * static_cast<S>(arch_.input_scale) + static_cast<S>(arch_.input_shift)).matrix();
    }

    void check_input(const MatrixT<S>& x) const {
        if (x.cols() != arch_.input_dim())
            throw ArgumentError("network " + arch_.tag + " expects " + std::to_string(arch_.input_dim()) +
                                " inputs, got " + std::to_string(x.cols()));
    }

    Architecture arch_;
    Params<S> params_;
};

/// Row-wise argmax.
template <typename S>
std::vector<int> argmax_rows(const MatrixT<S>& m) {
    std::vector<int> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Eigen::Index best;
        m.row(i).maxCoeff(&best);
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

/// Forward in chunks to bound memory; returns output rows.
template <typename S>
MatrixT<S> forward_chunked(const Network<S>& net, const MatrixT<S>& x, Eigen::Index chunk = 2048) {
    MatrixT<S> out(x.rows(), net.output_dim());
    for (Eigen::Index start = 0; start < x.rows(); start += chunk) {
        const Eigen::Index n = std::min(chunk, x.rows() - start);
        out.middleRows(start, n) = net.forward(x.middleRows(start, n));
    }
    return out;
}

}  // namespace replay_bench::nn
