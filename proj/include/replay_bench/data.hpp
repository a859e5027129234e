#pragma once

// IDX ingestion, canonical splits and the on-disk dataset cache.

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "replay_bench/errors.hpp"
#include "replay_bench/log.hpp"
#include "replay_bench/nn/tensor.hpp"
#include "replay_bench/random.hpp"

namespace replay_bench::data {

namespace fs = std::filesystem;

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
inline constexpr std::uint8_t kIdxTypeU8 = 0x08;
inline constexpr std::uint8_t kIdxTypeF32 = 0x0D;
inline constexpr int kImageSide = 28;
inline constexpr int kImagePixels = kImageSide * kImageSide;

/// Undecoded image file contents: count images of rows x cols bytes.
struct RawImages {
    std::vector<std::uint8_t> pixels;
    std::size_t count = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t pixels_per_image() const { return rows * cols; }
    std::span<const std::uint8_t> image(std::size_t i) const {
        return {pixels.data() + i * pixels_per_image(), pixels_per_image()};
    }
};

/// Flattened images in [0,1] with integer labels in [0, num_classes).
struct LabeledDataset {
    Matrix images;
    std::vector<int> labels;
    int num_classes = 10;

    std::size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }
    Eigen::Index dim() const { return images.cols(); }

    LabeledDataset subset(std::span<const std::size_t> indices) const {
        LabeledDataset out;
        out.num_classes = num_classes;
        out.images.resize(static_cast<Eigen::Index>(indices.size()), images.cols());
        out.labels.resize(indices.size());
        for (std::size_t i = 0; i < indices.size(); ++i) {
            out.images.row(static_cast<Eigen::Index>(i)) = images.row(static_cast<Eigen::Index>(indices[i]));
            out.labels[i] = labels[indices[i]];
        }
        return out;
    }

    std::vector<std::size_t> indices_of_class(int c) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) out.push_back(i);
        return out;
    }

    std::vector<std::size_t> class_counts() const {
        std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
        for (int l : labels) ++counts[static_cast<std::size_t>(l)];
        return counts;
    }
};

/// Row-wise concatenation. Both inputs must agree on dimension (or be empty).
inline LabeledDataset concatenate(const LabeledDataset& a, const LabeledDataset& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    if (a.dim() != b.dim()) throw ArgumentError("concatenate: image dimensions differ");
    LabeledDataset out;
    out.num_classes = std::max(a.num_classes, b.num_classes);
    out.images.resize(a.images.rows() + b.images.rows(), a.dim());
    out.images.topRows(a.images.rows()) = a.images;
    out.images.bottomRows(b.images.rows()) = b.images;
    out.labels = a.labels;
    out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
    return out;
}

// ---------------------------------------------------------------------------
// IDX decoding

namespace detail {

inline std::uint32_t read_be32(const std::uint8_t* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
           std::uint32_t{p[3]};
}

inline void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> bytes, const std::string& origin) {
    z_stream stream{};
    if (inflateInit2(&stream, 16 + MAX_WBITS) != Z_OK) throw CorruptionError("zlib init failed for " + origin);
    std::vector<std::uint8_t> out;
    std::array<std::uint8_t, 1 << 16> chunk{};
    stream.next_in = const_cast<Bytef*>(bytes.data());
    stream.avail_in = static_cast<uInt>(bytes.size());
    int status = Z_OK;
    while (status != Z_STREAM_END) {
        stream.next_out = chunk.data();
        stream.avail_out = static_cast<uInt>(chunk.size());
        status = inflate(&stream, Z_NO_FLUSH);
        if (status != Z_OK && status != Z_STREAM_END) {
            inflateEnd(&stream);
            throw CorruptionError("gzip stream is corrupt: " + origin);
        }
        out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - stream.avail_out));
        if (status == Z_OK && stream.avail_in == 0 && stream.avail_out != 0) {
            inflateEnd(&stream);
            throw CorruptionError("gzip stream is truncated: " + origin);
        }
    }
    inflateEnd(&stream);
    return out;
}

struct IdxHeader {
    std::uint8_t type = 0;
    std::vector<std::uint32_t> dims;
    std::size_t payload_offset = 0;
};

inline IdxHeader parse_header(std::span<const std::uint8_t> bytes, const std::string& origin) {
    if (bytes.size() < 4) throw FormatError("IDX file too short for a magic number: " + origin);
    if (bytes[0] != 0 || bytes[1] != 0) throw FormatError("bad IDX magic in " + origin);
    IdxHeader header;
    header.type = bytes[2];
    const std::size_t ndim = bytes[3];
    header.payload_offset = 4 + 4 * ndim;
    if (bytes.size() < header.payload_offset) throw CorruptionError("IDX header truncated: " + origin);
    for (std::size_t d = 0; d < ndim; ++d) header.dims.push_back(read_be32(bytes.data() + 4 + 4 * d));
    return header;
}

inline std::uint32_t magic_of(const IdxHeader& h) {
    return (std::uint32_t{h.type} << 8) | static_cast<std::uint32_t>(h.dims.size());
}

}  // namespace detail

/// Whole file contents; gzip input (magic 1f 8b) is inflated transparently.
inline std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) return detail::gunzip(bytes, path.string());
    return bytes;
}

inline RawImages parse_idx_images(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>") {
    const auto header = detail::parse_header(bytes, origin);
    if (detail::magic_of(header) != kIdxImagesMagic) {
        std::ostringstream msg;
        msg << "expected IDX image magic 0x00000803 in " << origin << ", got 0x" << std::hex
            << detail::magic_of(header);
        throw FormatError(msg.str());
    }
    RawImages raw;
    raw.count = header.dims[0];
    raw.rows = header.dims[1];
    raw.cols = header.dims[2];
    const std::size_t expected = raw.count * raw.rows * raw.cols;
    if (bytes.size() - header.payload_offset < expected)
        throw CorruptionError("IDX image payload truncated in " + origin);
    raw.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header.payload_offset),
                      bytes.begin() + static_cast<std::ptrdiff_t>(header.payload_offset + expected));
    return raw;
}

/// Labels above max_label raise ValidationError (9 for MNIST-style data).
inline std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>",
                                         int max_label = 9) {
    const auto header = detail::parse_header(bytes, origin);
    if (detail::magic_of(header) != kIdxLabelsMagic) throw FormatError("expected IDX label magic 0x00000801 in " + origin);
    const std::size_t count = header.dims[0];
    if (bytes.size() - header.payload_offset < count) throw CorruptionError("IDX label payload truncated in " + origin);
    std::vector<int> labels(count);
    for (std::size_t i = 0; i < count; ++i) {
        labels[i] = bytes[header.payload_offset + i];
        if (labels[i] > max_label)
            throw ValidationError("label " + std::to_string(labels[i]) + " at index " + std::to_string(i) +
                                  " exceeds " + std::to_string(max_label) + " in " + origin);
    }
    return labels;
}

inline RawImages load_idx_images(const fs::path& path) { return parse_idx_images(read_file_bytes(path), path.string()); }

inline std::vector<int> load_idx_labels(const fs::path& path, int max_label = 9) {
    return parse_idx_labels(read_file_bytes(path), path.string(), max_label);
}

/// Pixel / 255, one flattened row per image.
inline Matrix normalize(const RawImages& raw) {
    Matrix out(static_cast<Eigen::Index>(raw.count), static_cast<Eigen::Index>(raw.pixels_per_image()));
    float* dst = out.data();
    for (std::size_t i = 0; i < raw.pixels.size(); ++i) dst[i] = static_cast<float>(raw.pixels[i]) / 255.0f;
    return out;
}

inline LabeledDataset make_dataset(Matrix images, std::vector<int> labels, int num_classes = 10) {
    if (static_cast<std::size_t>(images.rows()) != labels.size())
        throw PairingError("image count " + std::to_string(images.rows()) + " does not match label count " +
                           std::to_string(labels.size()));
    for (int l : labels)
        if (l < 0 || l >= num_classes) throw ValidationError("label " + std::to_string(l) + " outside class range");
    LabeledDataset ds;
    ds.images = std::move(images);
    ds.labels = std::move(labels);
    ds.num_classes = num_classes;
    return ds;
}

/// Classes whose frequency deviates from uniform by more than `tolerance`
/// (relative). A warning is logged for each.
inline std::vector<int> check_class_balance(const LabeledDataset& ds, double tolerance = 0.05,
                                            std::string_view name = "dataset") {
    std::vector<int> off;
    if (ds.empty()) return off;
    const double expected = static_cast<double>(ds.size()) / ds.num_classes;
    const auto counts = ds.class_counts();
    for (int c = 0; c < ds.num_classes; ++c) {
        const double dev = std::abs(static_cast<double>(counts[static_cast<std::size_t>(c)]) - expected) / expected;
        if (dev > tolerance) {
            off.push_back(c);
            log::warning(std::string(name) + ": class " + std::to_string(c) + " has " +
                         std::to_string(counts[static_cast<std::size_t>(c)]) + " samples, " +
                         std::to_string(static_cast<int>(std::lround(dev * 100))) + "% away from uniform");
        }
    }
    return off;
}

// ---------------------------------------------------------------------------
// Canonical splits

struct SplitSpec {
    std::size_t train_count = 55000;
    std::size_t val_count = 5000;
    std::size_t test_count = 10000;
    std::uint64_t shuffle_seed = 0;

    /// Train gets whatever the validation split leaves of `source_count`.
    static SplitSpec for_source(std::size_t source_count, std::size_t test_count, std::size_t val_count = 5000,
                                std::uint64_t seed = 0) {
        return {source_count - std::min(val_count, source_count), val_count, test_count, seed};
    }
};

struct CanonicalSplits {
    LabeledDataset train;
    LabeledDataset val;
    LabeledDataset test;
    std::vector<std::size_t> train_indices;  // into the source train file
    std::vector<std::size_t> val_indices;
};

/// Train/validation are a seeded partition of the source train file; the
/// test file passes through untouched.
inline CanonicalSplits make_canonical_splits(const RawImages& train_images, const std::vector<int>& train_labels,
                                             const RawImages& test_images, const std::vector<int>& test_labels,
                                             const SplitSpec& spec, int num_classes = 10) {
    if (train_images.count != train_labels.size())
        throw PairingError("train images (" + std::to_string(train_images.count) + ") and labels (" +
                           std::to_string(train_labels.size()) + ") differ in count");
    if (test_images.count != test_labels.size())
        throw PairingError("test images (" + std::to_string(test_images.count) + ") and labels (" +
                           std::to_string(test_labels.size()) + ") differ in count");
    if (spec.train_count + spec.val_count > train_images.count)
        throw ArgumentError("split asks for " + std::to_string(spec.train_count + spec.val_count) +
                            " samples but the train file holds " + std::to_string(train_images.count));
    if (spec.train_count + spec.val_count != train_images.count)
        throw ArgumentError("train_count + val_count must equal the train file count (" +
                            std::to_string(train_images.count) + ")");
    if (spec.test_count != test_images.count)
        throw ArgumentError("test_count " + std::to_string(spec.test_count) + " does not match the test file (" +
                            std::to_string(test_images.count) + ")");

    Rng rng(derive_seed(spec.shuffle_seed, "canonical-split"));
    auto order = shuffled_indices(train_images.count, rng);

    CanonicalSplits out;
    out.val_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(spec.val_count));
    out.train_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(spec.val_count), order.end());
    std::sort(out.val_indices.begin(), out.val_indices.end());
    std::sort(out.train_indices.begin(), out.train_indices.end());

    const auto all_train = make_dataset(normalize(train_images), train_labels, num_classes);
    out.train = all_train.subset(out.train_indices);
    out.val = all_train.subset(out.val_indices);
    out.test = make_dataset(normalize(test_images), test_labels, num_classes);
    return out;
}

// ---------------------------------------------------------------------------
// Standard file discovery

struct SourceFiles {
    RawImages train_images;
    std::vector<int> train_labels;
    RawImages test_images;
    std::vector<int> test_labels;
};

/// Finds `name` or `name.gz` in dir.
inline fs::path find_idx_file(const fs::path& dir, const std::string& name) {
    for (const auto& candidate : {dir / name, dir / (name + ".gz")})
        if (fs::exists(candidate)) return candidate;
    // Some distributions use dots instead of dashes before "idx".
    std::string dotted = name;
    if (auto pos = dotted.find("-idx"); pos != std::string::npos) dotted[pos] = '.';
    for (const auto& candidate : {dir / dotted, dir / (dotted + ".gz")})
        if (fs::exists(candidate)) return candidate;
    throw IoError("no " + name + "[.gz] in " + dir.string());
}

/// Resolves `<root>/<dataset>` when present, else `root` itself.
inline fs::path resolve_dataset_dir(const fs::path& root, const std::string& dataset) {
    if (fs::is_directory(root / dataset)) return root / dataset;
    return root;
}

inline SourceFiles load_source_files(const fs::path& dir) {
    SourceFiles src;
    src.train_images = load_idx_images(find_idx_file(dir, "train-images-idx3-ubyte"));
    src.train_labels = load_idx_labels(find_idx_file(dir, "train-labels-idx1-ubyte"));
    src.test_images = load_idx_images(find_idx_file(dir, "t10k-images-idx3-ubyte"));
    src.test_labels = load_idx_labels(find_idx_file(dir, "t10k-labels-idx1-ubyte"));
    return src;
}

inline CanonicalSplits load_canonical_splits(const fs::path& dir, std::size_t val_count = 5000, std::uint64_t seed = 0) {
    const auto src = load_source_files(dir);
    auto spec = SplitSpec::for_source(src.train_images.count, src.test_images.count, val_count, seed);
    auto splits = make_canonical_splits(src.train_images, src.train_labels, src.test_images, src.test_labels, spec);
    check_class_balance(splits.train, 0.05, "train split");
    return splits;
}

// ---------------------------------------------------------------------------
// Cache format: IDX with float32 payload for images (bit-exact), uint8 labels.

inline std::vector<std::uint8_t> encode_idx_f32(const Matrix& images) {
    std::vector<std::uint8_t> out{0, 0, kIdxTypeF32, 2};
    detail::append_be32(out, static_cast<std::uint32_t>(images.rows()));
    detail::append_be32(out, static_cast<std::uint32_t>(images.cols()));
    out.reserve(out.size() + static_cast<std::size_t>(images.size()) * 4);
    for (Eigen::Index i = 0; i < images.size(); ++i)
        detail::append_be32(out, std::bit_cast<std::uint32_t>(images.data()[i]));
    return out;
}

inline Matrix decode_idx_f32(std::span<const std::uint8_t> bytes, const std::string& origin) {
    const auto header = detail::parse_header(bytes, origin);
    if (header.type != kIdxTypeF32 || header.dims.size() != 2) throw FormatError("expected float32 2-d IDX in " + origin);
    Matrix m(header.dims[0], header.dims[1]);
    const std::size_t n = static_cast<std::size_t>(m.size());
    if (bytes.size() - header.payload_offset < 4 * n) throw CorruptionError("float IDX payload truncated in " + origin);
    for (std::size_t i = 0; i < n; ++i)
        m.data()[i] = std::bit_cast<float>(detail::read_be32(bytes.data() + header.payload_offset + 4 * i));
    return m;
}

inline std::vector<std::uint8_t> encode_idx_labels(std::span<const int> labels) {
    std::vector<std::uint8_t> out{0, 0, kIdxTypeU8, 1};
    detail::append_be32(out, static_cast<std::uint32_t>(labels.size()));
    for (int l : labels) out.push_back(static_cast<std::uint8_t>(l));
    return out;
}

/// Raw uint8 image file (magic 0x803), for producing standard IDX inputs.
inline std::vector<std::uint8_t> encode_idx_images(const RawImages& raw) {
    std::vector<std::uint8_t> out{0, 0, kIdxTypeU8, 3};
    detail::append_be32(out, static_cast<std::uint32_t>(raw.count));
    detail::append_be32(out, static_cast<std::uint32_t>(raw.rows));
    detail::append_be32(out, static_cast<std::uint32_t>(raw.cols));
    out.insert(out.end(), raw.pixels.begin(), raw.pixels.end());
    return out;
}

inline void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

inline void save_dataset(const fs::path& dir, const LabeledDataset& ds) {
    fs::create_directories(dir);
    write_file_bytes(dir / "images.idx", encode_idx_f32(ds.images));
    write_file_bytes(dir / "labels.idx", encode_idx_labels(ds.labels));
    std::ofstream meta(dir / "dataset.txt");
    meta << "num_classes " << ds.num_classes << "\ncount " << ds.size() << "\n";
    if (!meta) throw IoError("cannot write " + (dir / "dataset.txt").string());
}

inline LabeledDataset load_dataset(const fs::path& dir) {
    int num_classes = 10;
    {
        std::ifstream meta(dir / "dataset.txt");
        std::string key;
        long value = 0;
        while (meta >> key >> value)
            if (key == "num_classes") num_classes = static_cast<int>(value);
    }
    auto images = decode_idx_f32(read_file_bytes(dir / "images.idx"), (dir / "images.idx").string());
    auto labels = load_idx_labels(dir / "labels.idx", num_classes - 1);
    return make_dataset(std::move(images), std::move(labels), num_classes);
}

}  // namespace replay_bench::data
