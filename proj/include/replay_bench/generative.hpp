#pragma once

// Generator families used for replay: GAN and WGAN-GP (marginal), CGAN and
// CVAE (class-conditional). Loss routines take their noise explicitly so a
// finite-difference check can replay them with the same draws.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "replay_bench/errors.hpp"
#include "replay_bench/nn/adam.hpp"
#include "replay_bench/nn/losses.hpp"
#include "replay_bench/nn/network.hpp"
#include "replay_bench/random.hpp"

namespace replay_bench::gen {

using nn::Network;
using nn::Params;

enum class GeneratorKind { gan, wgan_gp, cgan, cvae };

inline bool is_conditional(GeneratorKind k) { return k == GeneratorKind::cgan || k == GeneratorKind::cvae; }

inline std::string to_string(GeneratorKind k) {
    switch (k) {
        case GeneratorKind::gan: return "gan";
        case GeneratorKind::wgan_gp: return "wgan_gp";
        case GeneratorKind::cgan: return "cgan";
        case GeneratorKind::cvae: return "cvae";
    }
    return "?";
}

inline GeneratorKind parse_generator_kind(std::string_view s) {
    if (s == "gan") return GeneratorKind::gan;
    if (s == "wgan_gp" || s == "wgangp" || s == "wgan-gp") return GeneratorKind::wgan_gp;
    if (s == "cgan") return GeneratorKind::cgan;
    if (s == "cvae") return GeneratorKind::cvae;
    throw ArgumentError("unknown generator kind '" + std::string(s) + "'");
}

struct GenerativeHyper {
    int latent_dim = 62;
    int num_classes = 10;
    int data_dim = 784;
    double gp_lambda = 10.0;
    int n_critic = 5;
    /// Multiplies every hidden width (0.5 for the desk profile).
    double width_scale = 1.0;
    nn::AdamHyper adam{2e-4, 0.5, 0.999, 1e-8};
};

/// A generator plus its training partner: discriminator (gan, cgan),
/// critic (wgan_gp) or encoder (cvae, whose generator is the decoder).
template <typename S>
struct GenerativeModel {
    GeneratorKind kind = GeneratorKind::gan;
    int latent_dim = 62;
    int num_classes = 10;
    int data_dim = 784;
    Network<S> generator;
    Network<S> companion;

    bool conditional() const { return is_conditional(kind); }

    std::uint64_t checksum() const {
        return nn::checksum(generator.params()) ^ (nn::checksum(companion.params()) * 0x9e3779b97f4a7c15ULL);
    }

    template <typename To>
    GenerativeModel<To> cast() const {
        return {kind, latent_dim, num_classes, data_dim, generator.template cast<To>(), companion.template cast<To>()};
    }
};

inline int scaled_width(int w, double scale) { return std::max(1, static_cast<int>(std::lround(w * scale))); }

template <typename S>
GenerativeModel<S> make_generative_model(GeneratorKind kind, const GenerativeHyper& h, Rng& rng) {
    const int cond = is_conditional(kind) ? h.num_classes : 0;
    const int L = h.latent_dim;
    const int D = h.data_dim;
    auto w = [&](int width) { return scaled_width(width, h.width_scale); };
    GenerativeModel<S> m;
    m.kind = kind;
    m.latent_dim = L;
    m.num_classes = h.num_classes;
    m.data_dim = D;
    if (kind == GeneratorKind::cvae) {
        m.companion = Network<S>::initialized(nn::make_architecture("enc", {D + cond, w(400), 2 * L}), rng);
        m.generator = Network<S>::initialized(nn::make_architecture("dec", {L + cond, w(400), D}), rng);
    } else {
        m.generator = Network<S>::initialized(nn::make_architecture("gen", {L + cond, w(256), w(512), D}), rng);
        const char* family = kind == GeneratorKind::wgan_gp ? "critic" : "disc";
        m.companion = Network<S>::initialized(nn::make_architecture(family, {D + cond, w(512), w(256), 1}), rng);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Small matrix helpers

template <typename S>
MatrixT<S> one_hot(std::span<const int> labels, int num_classes) {
    MatrixT<S> m = MatrixT<S>::Zero(static_cast<Eigen::Index>(labels.size()), num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes) throw ArgumentError("class index out of range for one-hot");
        m(static_cast<Eigen::Index>(i), labels[i]) = S(1);
    }
    return m;
}

/// Rows must each be a 0/1 vector with a single 1.
template <typename S>
void require_one_hot(const MatrixT<S>& cond) {
    for (Eigen::Index i = 0; i < cond.rows(); ++i) {
        int ones = 0;
        for (Eigen::Index j = 0; j < cond.cols(); ++j) {
            if (cond(i, j) == S(1)) ++ones;
            else if (cond(i, j) != S(0)) throw ArgumentError("condition row is not one-hot");
        }
        if (ones != 1) throw ArgumentError("condition row is not one-hot");
    }
}

template <typename S>
MatrixT<S> hcat(const MatrixT<S>& a, const MatrixT<S>& b) {
    MatrixT<S> out(a.rows(), a.cols() + b.cols());
    out.leftCols(a.cols()) = a;
    out.rightCols(b.cols()) = b;
    return out;
}

template <typename S>
MatrixT<S> vcat(const MatrixT<S>& a, const MatrixT<S>& b) {
    MatrixT<S> out(a.rows() + b.rows(), a.cols());
    out.topRows(a.rows()) = a;
    out.bottomRows(b.rows()) = b;
    return out;
}

template <typename S>
MatrixT<S> normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    MatrixT<S> m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(rng.normal());
    return m;
}

// ---------------------------------------------------------------------------
// GAN / CGAN losses

inline constexpr double kLogClamp = 1e-12;

template <typename S>
struct GanLosses {
    S d_loss = S(0);
    S g_loss = S(0);
    MatrixT<S> d_grad_real;  // d d_loss / d real logits
    MatrixT<S> d_grad_fake;  // d d_loss / d fake logits
    MatrixT<S> g_grad_fake;  // d g_loss / d fake logits
};

/// Discriminator outputs are given as logits (D = sigmoid(logit)).
///   d_loss = -[mean log D(x) + mean log(1 - D(G(z)))]
///   g_loss = -mean log D(G(z))      (non-saturating)
/// Log arguments are clamped below at 1e-12, which zeroes the gradient of a
/// clamped term.
template <typename S>
GanLosses<S> gan_losses(const MatrixT<S>& real_logits, const MatrixT<S>& fake_logits) {
    const S cap = static_cast<S>(-std::log(kLogClamp));
    // -log sigmoid(l) = softplus(-l); -log(1 - sigmoid(l)) = softplus(l)
    auto term = [&](S l, S sign, S n, S& loss, S& grad) {
        const S v = nn::softplus(sign * l);
        if (v >= cap) {
            loss += cap / n;
            grad = S(0);
        } else {
            loss += v / n;
            grad = sign * nn::sigmoid(sign * l) / n;
        }
    };
    GanLosses<S> out;
    const S nr = static_cast<S>(std::max<Eigen::Index>(real_logits.rows(), 1));
    const S nf = static_cast<S>(std::max<Eigen::Index>(fake_logits.rows(), 1));
    out.d_grad_real.resize(real_logits.rows(), real_logits.cols());
    out.d_grad_fake.resize(fake_logits.rows(), fake_logits.cols());
    out.g_grad_fake.resize(fake_logits.rows(), fake_logits.cols());
    for (Eigen::Index i = 0; i < real_logits.size(); ++i)
        term(real_logits.data()[i], S(-1), nr, out.d_loss, out.d_grad_real.data()[i]);
    for (Eigen::Index i = 0; i < fake_logits.size(); ++i) {
        term(fake_logits.data()[i], S(1), nf, out.d_loss, out.d_grad_fake.data()[i]);
        term(fake_logits.data()[i], S(-1), nf, out.g_loss, out.g_grad_fake.data()[i]);
    }
    return out;
}

template <typename S>
struct LossGrads {
    S loss = S(0);
    Params<S> grads;
};

/// Discriminator update direction. Inputs already carry their condition
/// columns for CGAN.
template <typename S>
LossGrads<S> discriminator_gradients(const Network<S>& disc, const MatrixT<S>& real_in, const MatrixT<S>& fake_in) {
    nn::ForwardCache<S> cache;
    const MatrixT<S> logits = disc.forward(vcat(real_in, fake_in), cache);
    const auto losses = gan_losses<S>(logits.topRows(real_in.rows()), logits.bottomRows(fake_in.rows()));
    LossGrads<S> out;
    out.loss = losses.d_loss;
    disc.backward(cache, vcat(losses.d_grad_real, losses.d_grad_fake), &out.grads, nullptr);
    return out;
}

/// Generator update direction through a fixed discriminator. `cond` (one-hot
/// rows) is appended to both the generator input and its output for CGAN.
template <typename S>
LossGrads<S> generator_gan_gradients(const Network<S>& generator, const Network<S>& disc, const MatrixT<S>& z,
                                     const MatrixT<S>* cond) {
    nn::ForwardCache<S> g_cache, d_cache;
    const MatrixT<S> fake = generator.forward(cond ? hcat(z, *cond) : z, g_cache);
    const MatrixT<S> logits = disc.forward(cond ? hcat(fake, *cond) : fake, d_cache);
    const auto losses = gan_losses<S>(MatrixT<S>(0, 1), logits);
    MatrixT<S> d_input;
    disc.backward(d_cache, losses.g_grad_fake, nullptr, &d_input);
    const MatrixT<S> d_fake = d_input.leftCols(fake.cols());
    LossGrads<S> out;
    out.loss = losses.g_loss;
    generator.backward(g_cache, d_fake.cwiseProduct(fake).cwiseProduct((S(1) - fake.array()).matrix()), &out.grads,
                       nullptr);
    return out;
}

/// (discriminator loss, generator loss) for CGAN. Both networks see the
/// one-hot class concatenated to their input.
template <typename S>
std::pair<S, S> cgan_losses(const Network<S>& generator, const Network<S>& disc, const MatrixT<S>& real,
                            const MatrixT<S>& real_cond, const MatrixT<S>& z, const MatrixT<S>& fake_cond) {
    require_one_hot(real_cond);
    require_one_hot(fake_cond);
    const MatrixT<S> fake = generator.forward(hcat(z, fake_cond));
    const auto l = gan_losses<S>(disc.forward(hcat(real, real_cond)), disc.forward(hcat(fake, fake_cond)));
    return {l.d_loss, l.g_loss};
}

// ---------------------------------------------------------------------------
// WGAN-GP

template <typename S>
struct CriticTerms {
    S wasserstein = S(0);  // mean f(fake) - mean f(real)
    S penalty = S(0);      // mean (|grad_x f(x_hat)| - 1)^2, before lambda
};

/// Gradient penalty of a scalar-output critic at points `x`, and its exact
/// parameter gradient. The input gradient of a piecewise-linear network is
/// a product of weight matrices and activation-slope masks; the masks are
/// locally constant, so differentiating the penalty only has to run that
/// product chain in reverse.
template <typename S>
LossGrads<S> gradient_penalty(const Network<S>& critic, const MatrixT<S>& x) {
    const auto& p = critic.params();
    const auto& arch = critic.architecture();
    if (arch.output_dim() != 1 || arch.output != nn::Activation::identity)
        throw ArgumentError("gradient_penalty needs a scalar linear-output critic");
    const std::size_t L = p.size();
    const Eigen::Index B = x.rows();
    nn::ForwardCache<S> cache;
    critic.forward(x, cache);

    std::vector<MatrixT<S>> masks(L);  // masks[l] for hidden layer l (l < L-1)
    for (std::size_t l = 0; l + 1 < L; ++l) masks[l] = nn::activation_slope(arch.hidden, arch.leaky_slope, cache.pre[l]);

    // Forward chain: s[l] = d f / d pre[l]; a[l] = d f / d input[l].
    std::vector<MatrixT<S>> s(L), a(L);
    s[L - 1] = MatrixT<S>::Ones(B, 1);
    for (std::size_t l = L; l-- > 0;) {
        a[l] = s[l] * p[l].weight.transpose();
        if (l > 0) s[l - 1] = a[l].cwiseProduct(masks[l - 1]);
    }
    // gradient with respect to the raw input, through the fixed input map
    const S in_scale = static_cast<S>(arch.input_scale);
    const MatrixT<S> g = in_scale * a[0];

    LossGrads<S> out;
    MatrixT<S> a_bar(B, g.cols());
    for (Eigen::Index i = 0; i < B; ++i) {
        const S norm = g.row(i).norm();
        out.loss += (norm - S(1)) * (norm - S(1)) / static_cast<S>(B);
        const S scale = norm > S(0) ? S(2) * (norm - S(1)) / (norm * static_cast<S>(B)) : S(0);
        a_bar.row(i) = (scale * in_scale) * g.row(i);
    }

    out.grads = nn::zeros_like(p);
    for (std::size_t l = 0; l < L; ++l) {
        out.grads[l].weight.noalias() = a_bar.transpose() * s[l];
        if (l + 1 == L) break;
        const MatrixT<S> s_bar = a_bar * p[l].weight;
        a_bar = s_bar.cwiseProduct(masks[l]);
    }
    return out;
}

/// Critic loss mean f(fake) - mean f(real) + lambda * penalty at
/// x_hat = u * real + (1 - u) * fake, one u per row.
template <typename S>
LossGrads<S> critic_gradients(const Network<S>& critic, const MatrixT<S>& real, const MatrixT<S>& fake,
                              std::span<const S> u, double gp_lambda, CriticTerms<S>* terms = nullptr) {
    const Eigen::Index B = real.rows();
    if (fake.rows() != B || static_cast<Eigen::Index>(u.size()) != B)
        throw ArgumentError("critic_gradients: batch sizes differ");
    nn::ForwardCache<S> cache;
    const MatrixT<S> f = critic.forward(vcat(real, fake), cache);
    const S inv_b = S(1) / static_cast<S>(std::max<Eigen::Index>(B, 1));
    MatrixT<S> delta(2 * B, 1);
    delta.topRows(B).setConstant(-inv_b);
    delta.bottomRows(B).setConstant(inv_b);
    LossGrads<S> out;
    const S w = f.bottomRows(B).sum() * inv_b - f.topRows(B).sum() * inv_b;
    critic.backward(cache, delta, &out.grads, nullptr);

    MatrixT<S> x_hat(B, real.cols());
    for (Eigen::Index i = 0; i < B; ++i) x_hat.row(i) = u[static_cast<std::size_t>(i)] * real.row(i) +
                                                        (S(1) - u[static_cast<std::size_t>(i)]) * fake.row(i);
    const auto gp = gradient_penalty(critic, x_hat);
    nn::add_scaled(out.grads, gp.grads, static_cast<S>(gp_lambda));
    out.loss = w + static_cast<S>(gp_lambda) * gp.loss;
    if (terms) {
        terms->wasserstein = w;
        terms->penalty = gp.loss;
    }
    return out;
}

/// Generator loss -mean f(G(z)) and its gradient.
template <typename S>
LossGrads<S> generator_wgan_gradients(const Network<S>& generator, const Network<S>& critic, const MatrixT<S>& z) {
    nn::ForwardCache<S> g_cache, c_cache;
    const MatrixT<S> fake = generator.forward(z, g_cache);
    const MatrixT<S> f = critic.forward(fake, c_cache);
    const S inv_b = S(1) / static_cast<S>(std::max<Eigen::Index>(z.rows(), 1));
    MatrixT<S> d_input;
    critic.backward(c_cache, MatrixT<S>::Constant(z.rows(), 1, -inv_b), nullptr, &d_input);
    LossGrads<S> out;
    out.loss = -f.sum() * inv_b;
    generator.backward(g_cache, d_input.cwiseProduct(fake).cwiseProduct((S(1) - fake.array()).matrix()), &out.grads,
                       nullptr);
    return out;
}

/// (critic loss, generator loss) for fixed draws.
template <typename S>
std::pair<S, S> wgan_gp_losses(const Network<S>& critic, const Network<S>& generator, const MatrixT<S>& real,
                               const MatrixT<S>& z, std::span<const S> u, double gp_lambda) {
    const MatrixT<S> fake = generator.forward(z);
    const auto c = critic_gradients(critic, real, fake, u, gp_lambda);
    return {c.loss, -critic.forward(fake).mean()};
}

// ---------------------------------------------------------------------------
// CVAE

/// Mean over rows of 0.5 * sum(mu^2 + exp(logvar) - 1 - logvar).
template <typename S>
S kl_standard_normal(const MatrixT<S>& mu, const MatrixT<S>& logvar) {
    if (mu.rows() == 0) return S(0);
    const auto terms = mu.array().square() + logvar.array().exp() - S(1) - logvar.array();
    return S(0.5) * terms.sum() / static_cast<S>(mu.rows());
}

template <typename S>
struct CvaeResult {
    S loss = S(0);
    S reconstruction = S(0);
    S kl = S(0);
    Params<S> encoder_grads;
    Params<S> decoder_grads;
};

/// Negative ELBO: BCE(x, decoder(z, y)) summed over pixels plus
/// KL(N(mu, sigma^2) || N(0, I)), averaged over the batch, with
/// z = mu + sigma * eps.
template <typename S>
CvaeResult<S> cvae_elbo(const Network<S>& encoder, const Network<S>& decoder, const MatrixT<S>& x,
                        const MatrixT<S>& y, const MatrixT<S>& eps, bool with_gradients = true) {
    const Eigen::Index L = eps.cols();
    if (encoder.output_dim() != 2 * L) throw ArgumentError("cvae_elbo: encoder output must be 2 * latent_dim");
    nn::ForwardCache<S> e_cache, d_cache;
    const MatrixT<S> stats = encoder.forward(hcat(x, y), e_cache);
    const MatrixT<S> mu = stats.leftCols(L);
    const MatrixT<S> logvar = stats.rightCols(L);
    const MatrixT<S> sigma = (S(0.5) * logvar.array()).exp().matrix();
    const MatrixT<S> z = mu + sigma.cwiseProduct(eps);
    decoder.forward(hcat(z, y), d_cache);
    auto bce = nn::binary_cross_entropy_with_logits<S>(d_cache.logits(), x);

    CvaeResult<S> out;
    out.reconstruction = bce.loss;
    out.kl = kl_standard_normal(mu, logvar);
    out.loss = out.reconstruction + out.kl;
    if (!with_gradients) return out;

    const S inv_b = S(1) / static_cast<S>(std::max<Eigen::Index>(x.rows(), 1));
    MatrixT<S> d_dec_in;
    decoder.backward(d_cache, std::move(bce.grad), &out.decoder_grads, &d_dec_in);
    const MatrixT<S> dz = d_dec_in.leftCols(L);
    MatrixT<S> d_stats(x.rows(), 2 * L);
    d_stats.leftCols(L) = dz + inv_b * mu;
    d_stats.rightCols(L) = (dz.cwiseProduct(S(0.5) * sigma.cwiseProduct(eps))).array() +
                           inv_b * S(0.5) * (logvar.array().exp() - S(1));
    encoder.backward(e_cache, d_stats, &out.encoder_grads, nullptr);
    return out;
}

// ---------------------------------------------------------------------------
// Sampling

/// n images G(z), z ~ N(0, I). Marginal models only.
template <typename S>
MatrixT<S> sample_marginal(const GenerativeModel<S>& model, std::size_t n, Rng& rng) {
    if (model.conditional()) throw KindError("sample_marginal called on conditional model " + to_string(model.kind));
    const MatrixT<S> z = normal_matrix<S>(static_cast<Eigen::Index>(n), model.latent_dim, rng);
    return nn::forward_chunked(model.generator, z);
}

template <typename S>
struct LabeledSamples {
    MatrixT<S> images;
    std::vector<int> labels;
};

/// n images of class c. Conditional models only.
template <typename S>
LabeledSamples<S> sample_conditional(const GenerativeModel<S>& model, int c, std::size_t n, Rng& rng) {
    if (!model.conditional()) throw KindError("sample_conditional called on marginal model " + to_string(model.kind));
    if (c < 0 || c >= model.num_classes) throw ArgumentError("class " + std::to_string(c) + " out of range");
    LabeledSamples<S> out;
    out.labels.assign(n, c);
    const MatrixT<S> z = normal_matrix<S>(static_cast<Eigen::Index>(n), model.latent_dim, rng);
    const MatrixT<S> cond = one_hot<S>(out.labels, model.num_classes);
    out.images = nn::forward_chunked(model.generator, hcat(z, cond));
    return out;
}

// ---------------------------------------------------------------------------
// Training

template <typename S>
struct GenerativeOptimizer {
    nn::AdamState<S> generator;
    nn::AdamState<S> companion;
    std::uint64_t steps = 0;
    std::uint64_t companion_updates = 0;  // discriminator / critic / encoder
    std::uint64_t generator_updates = 0;

    explicit GenerativeOptimizer(nn::AdamHyper h = {2e-4, 0.5, 0.999, 1e-8}) : generator(h), companion(h) {}

    void reset() {
        generator.reset();
        companion.reset();
    }
};

struct StepStats {
    double companion_loss = 0.0;  // discriminator / critic loss; ELBO for cvae
    std::optional<double> generator_loss;
};

/// One training step on a real batch (labels are required for conditional
/// models and ignored otherwise).
///   gan, cgan  one discriminator update, then one generator update
///   wgan_gp    one critic update; every n_critic-th call also updates the
///              generator, so each generator update follows n_critic
///              critic updates on fresh batches
///   cvae       one ELBO step on encoder and decoder
template <typename S>
StepStats generator_train_step(GenerativeModel<S>& model, const MatrixT<S>& real, std::span<const int> labels, Rng& rng,
                               GenerativeOptimizer<S>& opt, const GenerativeHyper& h) {
    const Eigen::Index B = real.rows();
    if (B == 0) return {};
    std::optional<MatrixT<S>> cond;
    if (model.conditional()) {
        if (static_cast<Eigen::Index>(labels.size()) != B) throw ArgumentError("conditional step needs one label per row");
        cond = one_hot<S>(labels, model.num_classes);
    }
    auto check = [](double v, const char* what) {
        if (!std::isfinite(v)) throw nn::NumericError(std::string("non-finite ") + what);
    };
    StepStats stats;
    ++opt.steps;
    switch (model.kind) {
        case GeneratorKind::gan:
        case GeneratorKind::cgan: {
            const MatrixT<S> z = normal_matrix<S>(B, model.latent_dim, rng);
            const MatrixT<S> fake = model.generator.forward(cond ? hcat(z, *cond) : z);
            auto d = discriminator_gradients(model.companion, cond ? hcat(real, *cond) : real,
                                             cond ? hcat(fake, *cond) : fake);
            check(d.loss, "discriminator loss");
            nn::adam_step(model.companion.params(), d.grads, opt.companion);
            ++opt.companion_updates;
            auto g = generator_gan_gradients(model.generator, model.companion, z, cond ? &*cond : nullptr);
            check(g.loss, "generator loss");
            nn::adam_step(model.generator.params(), g.grads, opt.generator);
            ++opt.generator_updates;
            stats.companion_loss = d.loss;
            stats.generator_loss = g.loss;
            break;
        }
        case GeneratorKind::wgan_gp: {
            const MatrixT<S> z = normal_matrix<S>(B, model.latent_dim, rng);
            const MatrixT<S> fake = model.generator.forward(z);
            std::vector<S> u(static_cast<std::size_t>(B));
            for (auto& v : u) v = static_cast<S>(rng.uniform());
            auto c = critic_gradients<S>(model.companion, real, fake, u, h.gp_lambda);
            check(c.loss, "critic loss");
            nn::adam_step(model.companion.params(), c.grads, opt.companion);
            ++opt.companion_updates;
            stats.companion_loss = c.loss;
            if (opt.companion_updates % static_cast<std::uint64_t>(h.n_critic) == 0) {
                const MatrixT<S> z2 = normal_matrix<S>(B, model.latent_dim, rng);
                auto g = generator_wgan_gradients(model.generator, model.companion, z2);
                check(g.loss, "generator loss");
                nn::adam_step(model.generator.params(), g.grads, opt.generator);
                ++opt.generator_updates;
                stats.generator_loss = g.loss;
            }
            break;
        }
        case GeneratorKind::cvae: {
            const MatrixT<S> eps = normal_matrix<S>(B, model.latent_dim, rng);
            auto r = cvae_elbo(model.companion, model.generator, real, *cond, eps);
            check(r.loss, "ELBO");
            nn::adam_step(model.companion.params(), r.encoder_grads, opt.companion);
            nn::adam_step(model.generator.params(), r.decoder_grads, opt.generator);
            ++opt.companion_updates;
            ++opt.generator_updates;
            stats.companion_loss = r.loss;
            stats.generator_loss = r.loss;
            break;
        }
    }
    return stats;
}

}  // namespace replay_bench::gen
