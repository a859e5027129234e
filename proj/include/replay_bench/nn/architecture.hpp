#pragma once

#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "replay_bench/errors.hpp"

namespace replay_bench::nn {

enum class Activation { identity, relu, leaky_relu, sigmoid };

/// Fully connected stack described by a tag such as "mlp-784-200-200-10".
/// The family prefix fixes the activations:
///   mlp, enc        ReLU hidden, linear output
///   gen             leaky ReLU (0.2) hidden, sigmoid output
///   dec             ReLU hidden, sigmoid output
///   disc, critic    leaky ReLU (0.2) hidden, linear output, inputs in
///                   [0, 1] mapped to [-1, 1] before the first layer
///   lin             no hidden nonlinearity, linear output
struct Architecture {
    std::string tag;
    std::string family;
    std::vector<int> widths;  // input, hidden..., output
    Activation hidden = Activation::relu;
    Activation output = Activation::identity;
    double leaky_slope = 0.2;
    // fixed input map x -> input_scale * x + input_shift
    double input_scale = 1.0;
    double input_shift = 0.0;

    bool maps_input() const { return input_scale != 1.0 || input_shift != 0.0; }

    int input_dim() const { return widths.front(); }
    int output_dim() const { return widths.back(); }
    std::size_t num_layers() const { return widths.size() - 1; }
};

inline std::string make_tag(std::string_view family, const std::vector<int>& widths) {
    std::string tag(family);
    for (int w : widths) tag += "-" + std::to_string(w);
    return tag;
}

inline Architecture parse_architecture(std::string_view tag) {
    Architecture arch;
    arch.tag = std::string(tag);
    std::istringstream in{std::string(tag)};
    std::string part;
    if (!std::getline(in, arch.family, '-')) throw ArgumentError("empty architecture tag");
    while (std::getline(in, part, '-')) {
        try {
            std::size_t used = 0;
            const int w = std::stoi(part, &used);
            if (used != part.size() || w <= 0) throw ArgumentError("bad width");
            arch.widths.push_back(w);
        } catch (const std::exception&) {
            throw ArgumentError("architecture tag '" + std::string(tag) + "' has a non-numeric width '" + part + "'");
        }
    }
    if (arch.widths.size() < 2) throw ArgumentError("architecture tag '" + std::string(tag) + "' needs at least two widths");
    const auto& f = arch.family;
    if (f == "mlp" || f == "enc") {
        arch.hidden = Activation::relu;
        arch.output = Activation::identity;
    } else if (f == "gen") {
        arch.hidden = Activation::leaky_relu;
        arch.output = Activation::sigmoid;
    } else if (f == "dec") {
        arch.hidden = Activation::relu;
        arch.output = Activation::sigmoid;
    } else if (f == "disc" || f == "critic") {
        // without centering the GAN discriminator wins early and the
        // generator collapses onto one class
        arch.hidden = Activation::leaky_relu;
        arch.output = Activation::identity;
        arch.input_scale = 2.0;
        arch.input_shift = -1.0;
    } else if (f == "lin") {
        arch.hidden = Activation::identity;
        arch.output = Activation::identity;
    } else {
        throw ArgumentError("unknown architecture family '" + f + "' in tag '" + std::string(tag) + "'");
    }
    return arch;
}

inline Architecture make_architecture(std::string_view family, const std::vector<int>& widths) {
    return parse_architecture(make_tag(family, widths));
}

/// The classifier every strategy uses.
inline constexpr std::string_view kClassifierTag = "mlp-784-200-200-10";

}  // namespace replay_bench::nn
