#pragma once

// Checkpoint layout for a network named <name> inside a directory:
//   <name>.manifest   text: architecture tag, seed, one line per array
//   <name>.<array>.f32  raw little-endian float32, row-major

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "replay_bench/errors.hpp"
#include "replay_bench/nn/network.hpp"

namespace replay_bench::nn {

namespace detail {

inline void write_f32_le(std::ostream& out, float v) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    const char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                           static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
    out.write(bytes, 4);
}

inline float read_f32_le(const unsigned char* p) {
    const std::uint32_t bits = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
                               (std::uint32_t{p[3]} << 24);
    return std::bit_cast<float>(bits);
}

template <typename Mat>
void write_array(const std::filesystem::path& path, const Mat& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (Eigen::Index i = 0; i < m.size(); ++i) write_f32_le(out, static_cast<float>(m.data()[i]));
    if (!out) throw IoError("short write to " + path.string());
}

template <typename Mat>
void read_array(const std::filesystem::path& path, Mat& m) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() != static_cast<std::size_t>(m.size()) * 4)
        throw CorruptionError("array file " + path.string() + " has the wrong size");
    using S = typename Mat::Scalar;
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(read_f32_le(bytes.data() + 4 * i));
}

}  // namespace detail

template <typename S>
void save_checkpoint(const std::filesystem::path& dir, const std::string& name, const Network<S>& net,
                     std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    std::ofstream manifest(dir / (name + ".manifest"));
    manifest << "arch " << net.tag() << "\n";
    manifest << "seed " << seed << "\n";
    manifest << "dtype float32-le\n";
    const auto& p = net.params();
    for (std::size_t l = 0; l < p.size(); ++l) {
        const std::string w = "layer" + std::to_string(l) + ".weight";
        const std::string b = "layer" + std::to_string(l) + ".bias";
        manifest << "array " << w << " " << p[l].weight.rows() << " " << p[l].weight.cols() << "\n";
        manifest << "array " << b << " 1 " << p[l].bias.size() << "\n";
        detail::write_array(dir / (name + "." + w + ".f32"), p[l].weight);
        detail::write_array(dir / (name + "." + b + ".f32"), p[l].bias);
    }
    if (!manifest) throw IoError("cannot write manifest for " + name);
}

template <typename S>
struct LoadedCheckpoint {
    Network<S> network;
    std::uint64_t seed = 0;
};

template <typename S>
LoadedCheckpoint<S> load_checkpoint(const std::filesystem::path& dir, const std::string& name) {
    std::ifstream manifest(dir / (name + ".manifest"));
    if (!manifest) throw IoError("no checkpoint manifest " + (dir / (name + ".manifest")).string());
    std::string line, tag;
    std::uint64_t seed = 0;
    std::vector<std::tuple<std::string, long, long>> arrays;
    while (std::getline(manifest, line)) {
        std::istringstream in(line);
        std::string key;
        in >> key;
        if (key == "arch") in >> tag;
        else if (key == "seed") in >> seed;
        else if (key == "array") {
            std::string n;
            long r = 0, c = 0;
            in >> n >> r >> c;
            arrays.emplace_back(n, r, c);
        }
    }
    LoadedCheckpoint<S> out{Network<S>(parse_architecture(tag)), seed};
    auto& p = out.network.params();
    if (arrays.size() != 2 * p.size()) throw FormatError("checkpoint " + name + " does not match architecture " + tag);
    for (std::size_t l = 0; l < p.size(); ++l) {
        const auto& [wn, wr, wc] = arrays[2 * l];
        if (wr != p[l].weight.rows() || wc != p[l].weight.cols())
            throw FormatError("checkpoint " + name + ": shape mismatch for " + wn);
        detail::read_array(dir / (name + "." + wn + ".f32"), p[l].weight);
        detail::read_array(dir / (name + "." + std::get<0>(arrays[2 * l + 1]) + ".f32"), p[l].bias);
    }
    return out;
}

}  // namespace replay_bench::nn
