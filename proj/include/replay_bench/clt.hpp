#pragma once

// Continual-learning task sequences: disjoint classes, rotations, permutations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "replay_bench/data.hpp"
#include "replay_bench/errors.hpp"
#include "replay_bench/random.hpp"

namespace replay_bench::clt {

using data::LabeledDataset;

enum class CltKind { disjoint, rotations, permutations };

inline std::string to_string(CltKind kind) {
    switch (kind) {
        case CltKind::disjoint: return "disjoint";
        case CltKind::rotations: return "rotations";
        case CltKind::permutations: return "permutations";
    }
    return "?";
}

inline CltKind parse_clt_kind(std::string_view name) {
    if (name == "disjoint") return CltKind::disjoint;
    if (name == "rotations" || name == "rotation") return CltKind::rotations;
    if (name == "permutations" || name == "permutation") return CltKind::permutations;
    throw ArgumentError("unknown CLT kind '" + std::string(name) + "' (disjoint, rotations, permutations)");
}

struct Identity {};
struct Rotation {
    double angle = 0.0;  // radians, in [0, pi/2]
};
struct Permutation {
    std::vector<std::uint32_t> perm;
    std::uint64_t seed = 0;  // seed the bijection was drawn from
};
struct ClassFilter {
    std::vector<int> classes;
};

using TransformSpec = std::variant<Identity, Rotation, Permutation, ClassFilter>;

struct SubTask {
    int index = 0;
    LabeledDataset train;
    LabeledDataset test;
    TransformSpec transform;

    /// Classes present in this sub-task's training data, ascending.
    std::vector<int> classes() const {
        if (auto f = std::get_if<ClassFilter>(&transform)) return f->classes;
        std::vector<int> all(static_cast<std::size_t>(train.num_classes));
        for (int c = 0; c < train.num_classes; ++c) all[static_cast<std::size_t>(c)] = c;
        return all;
    }
};

struct TaskSequence {
    std::vector<SubTask> sub_tasks;
    CltKind kind = CltKind::disjoint;
    std::uint64_t seed = 0;

    std::size_t size() const { return sub_tasks.size(); }

    /// Union of every sub-task's test set, in sub-task order.
    LabeledDataset whole_test_set() const {
        LabeledDataset out;
        for (const auto& st : sub_tasks) out = data::concatenate(out, st.test);
        return out;
    }
};

// ---------------------------------------------------------------------------
// Per-image transforms

inline bool is_bijection(std::span<const std::uint32_t> perm) {
    std::vector<bool> seen(perm.size(), false);
    for (auto p : perm) {
        if (p >= perm.size() || seen[p]) return false;
        seen[p] = true;
    }
    return true;
}

inline std::vector<std::uint32_t> invert_permutation(std::span<const std::uint32_t> perm) {
    if (!is_bijection(perm)) throw ArgumentError("permutation is not a bijection");
    std::vector<std::uint32_t> inv(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = static_cast<std::uint32_t>(i);
    return inv;
}

inline std::vector<std::uint32_t> identity_permutation(std::size_t n) {
    std::vector<std::uint32_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<std::uint32_t>(i);
    return p;
}

inline std::vector<std::uint32_t> random_permutation(std::size_t n, std::uint64_t seed) {
    auto p = identity_permutation(n);
    Rng rng(seed);
    rng.shuffle(p);
    return p;
}

/// out[i] = in[perm[i]].
inline std::vector<float> apply_permutation(std::span<const float> image, std::span<const std::uint32_t> perm) {
    if (image.size() != perm.size()) throw ArgumentError("permutation length does not match image length");
    if (!is_bijection(perm)) throw ArgumentError("permutation is not a bijection");
    std::vector<float> out(image.size());
    for (std::size_t i = 0; i < perm.size(); ++i) out[i] = image[perm[i]];
    return out;
}

/// In-plane rotation of a side x side image about its center by inverse
/// mapping with bilinear interpolation; samples outside the frame read as 0.
inline std::vector<float> apply_rotation(std::span<const float> image, double angle, int side = data::kImageSide) {
    const auto n = static_cast<std::size_t>(side);
    if (image.size() != n * n) throw ArgumentError("rotation expects a square image");
    const double center = (side - 1) / 2.0;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    auto at = [&](long r, long col) -> double {
        if (r < 0 || col < 0 || r >= side || col >= side) return 0.0;
        return image[static_cast<std::size_t>(r) * n + static_cast<std::size_t>(col)];
    };
    std::vector<float> out(n * n);
    for (int r = 0; r < side; ++r) {
        for (int col = 0; col < side; ++col) {
            const double dx = col - center;
            const double dy = r - center;
            const double src_x = c * dx + s * dy + center;
            const double src_y = -s * dx + c * dy + center;
            const double x0 = std::floor(src_x);
            const double y0 = std::floor(src_y);
            const double fx = src_x - x0;
            const double fy = src_y - y0;
            const auto ix = static_cast<long>(x0);
            const auto iy = static_cast<long>(y0);
            const double v = (1 - fy) * ((1 - fx) * at(iy, ix) + fx * at(iy, ix + 1)) +
                             fy * ((1 - fx) * at(iy + 1, ix) + fx * at(iy + 1, ix + 1));
            out[static_cast<std::size_t>(r) * n + static_cast<std::size_t>(col)] =
                static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return out;
}

inline LabeledDataset transform_dataset(const LabeledDataset& src, const TransformSpec& transform) {
    if (std::holds_alternative<Identity>(transform)) return src;
    if (auto f = std::get_if<ClassFilter>(&transform)) {
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < src.size(); ++i)
            if (std::find(f->classes.begin(), f->classes.end(), src.labels[i]) != f->classes.end()) keep.push_back(i);
        return src.subset(keep);
    }
    LabeledDataset out = src;
    const auto dim = static_cast<std::size_t>(src.dim());
    for (Eigen::Index i = 0; i < src.images.rows(); ++i) {
        std::span<const float> row(src.images.row(i).data(), dim);
        std::vector<float> moved;
        if (auto rot = std::get_if<Rotation>(&transform)) moved = apply_rotation(row, rot->angle);
        else moved = apply_permutation(row, std::get<Permutation>(transform).perm);
        std::copy(moved.begin(), moved.end(), out.images.row(i).data());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sequence builders

/// One sub-task per class, in `class_order`.
inline TaskSequence build_disjoint(const LabeledDataset& train, const LabeledDataset& test,
                                   std::span<const int> class_order) {
    const int k = train.num_classes;
    std::vector<bool> seen(static_cast<std::size_t>(k), false);
    if (class_order.size() != static_cast<std::size_t>(k))
        throw ArgumentError("class_order must list each of the " + std::to_string(k) + " classes once");
    for (int c : class_order) {
        if (c < 0 || c >= k || seen[static_cast<std::size_t>(c)])
            throw ArgumentError("class_order is not a permutation of the classes");
        seen[static_cast<std::size_t>(c)] = true;
    }
    TaskSequence seq;
    seq.kind = CltKind::disjoint;
    for (std::size_t t = 0; t < class_order.size(); ++t) {
        SubTask st;
        st.index = static_cast<int>(t);
        st.transform = ClassFilter{{class_order[t]}};
        st.train = transform_dataset(train, st.transform);
        st.test = transform_dataset(test, st.transform);
        seq.sub_tasks.push_back(std::move(st));
    }
    return seq;
}

inline TaskSequence build_disjoint(const LabeledDataset& train, const LabeledDataset& test) {
    std::vector<int> order(static_cast<std::size_t>(train.num_classes));
    for (int c = 0; c < train.num_classes; ++c) order[static_cast<std::size_t>(c)] = c;
    return build_disjoint(train, test, order);
}

struct TransformOptions {
    /// When false, sub-task 0 is the untransformed data.
    bool transform_first = false;
};

/// Angle for sub-task t, drawn uniformly on [0, pi/2].
inline double rotation_angle(std::uint64_t seed, int t) {
    Rng rng(derive_seed(seed, "rotation-angle", static_cast<std::uint64_t>(t)));
    return rng.uniform(0.0, std::numbers::pi / 2);
}

inline std::uint64_t permutation_seed(std::uint64_t seed, int t) {
    return derive_seed(seed, "pixel-permutation", static_cast<std::uint64_t>(t));
}

inline TaskSequence build_transformed(CltKind kind, const LabeledDataset& train, const LabeledDataset& test,
                                      int num_tasks, std::uint64_t seed, TransformOptions options = {}) {
    if (num_tasks < 1) throw ArgumentError("num_tasks must be at least 1");
    TaskSequence seq;
    seq.kind = kind;
    seq.seed = seed;
    for (int t = 0; t < num_tasks; ++t) {
        SubTask st;
        st.index = t;
        if (t == 0 && !options.transform_first) {
            st.transform = Identity{};
        } else if (kind == CltKind::rotations) {
            st.transform = Rotation{rotation_angle(seed, t)};
        } else {
            const auto pseed = permutation_seed(seed, t);
            st.transform = Permutation{random_permutation(static_cast<std::size_t>(train.dim()), pseed), pseed};
        }
        st.train = transform_dataset(train, st.transform);
        st.test = transform_dataset(test, st.transform);
        seq.sub_tasks.push_back(std::move(st));
    }
    return seq;
}

inline TaskSequence build_rotations(const LabeledDataset& train, const LabeledDataset& test, int num_tasks,
                                    std::uint64_t seed, TransformOptions options = {}) {
    return build_transformed(CltKind::rotations, train, test, num_tasks, seed, options);
}

inline TaskSequence build_permutations(const LabeledDataset& train, const LabeledDataset& test, int num_tasks,
                                       std::uint64_t seed, TransformOptions options = {}) {
    return build_transformed(CltKind::permutations, train, test, num_tasks, seed, options);
}

/// Dispatch on kind; num_tasks is ignored for disjoint (always one per class).
inline TaskSequence build(CltKind kind, const LabeledDataset& train, const LabeledDataset& test, int num_tasks,
                          std::uint64_t seed, TransformOptions options = {}) {
    if (kind == CltKind::disjoint) {
        auto seq = build_disjoint(train, test);
        seq.seed = seed;
        return seq;
    }
    return build_transformed(kind, train, test, num_tasks, seed, options);
}

// ---------------------------------------------------------------------------
// On-disk cache: subtask_<t>/{train,test}/ in the dataset cache format plus
// a plain-text manifest.

inline std::string describe(const TransformSpec& transform) {
    std::ostringstream out;
    out.precision(17);
    std::visit(
        [&](const auto& t) {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, Identity>) out << "identity";
            else if constexpr (std::is_same_v<T, Rotation>) out << "rotation " << t.angle;
            else if constexpr (std::is_same_v<T, Permutation>) out << "permutation " << t.seed;
            else {
                out << "classes";
                for (int c : t.classes) out << ' ' << c;
            }
        },
        transform);
    return out.str();
}

inline void save_task_sequence(const std::filesystem::path& dir, const TaskSequence& seq) {
    std::filesystem::create_directories(dir);
    std::ofstream manifest(dir / "manifest.txt");
    manifest << "clt_kind " << to_string(seq.kind) << "\n";
    manifest << "seed " << seq.seed << "\n";
    manifest << "num_subtasks " << seq.size() << "\n";
    for (const auto& st : seq.sub_tasks) {
        manifest << "subtask " << st.index << ' ' << describe(st.transform) << "\n";
        const auto sub = dir / ("subtask_" + std::to_string(st.index));
        data::save_dataset(sub / "train", st.train);
        data::save_dataset(sub / "test", st.test);
    }
    if (!manifest) throw IoError("cannot write manifest in " + dir.string());
}

inline TransformSpec parse_transform(std::istringstream& line, std::size_t dim) {
    std::string kind;
    line >> kind;
    if (kind == "identity") return Identity{};
    if (kind == "rotation") {
        double a = 0;
        line >> a;
        return Rotation{a};
    }
    if (kind == "permutation") {
        std::uint64_t s = 0;
        line >> s;
        return Permutation{random_permutation(dim, s), s};
    }
    if (kind == "classes") {
        ClassFilter f;
        int c;
        while (line >> c) f.classes.push_back(c);
        return f;
    }
    throw FormatError("unknown transform '" + kind + "' in manifest");
}

inline TaskSequence load_task_sequence(const std::filesystem::path& dir) {
    std::ifstream manifest(dir / "manifest.txt");
    if (!manifest) throw IoError("no manifest.txt in " + dir.string());
    TaskSequence seq;
    std::string text;
    while (std::getline(manifest, text)) {
        std::istringstream line(text);
        std::string key;
        line >> key;
        if (key == "clt_kind") {
            std::string k;
            line >> k;
            seq.kind = parse_clt_kind(k);
        } else if (key == "seed") {
            line >> seq.seed;
        } else if (key == "subtask") {
            SubTask st;
            line >> st.index;
            const auto sub = dir / ("subtask_" + std::to_string(st.index));
            st.train = data::load_dataset(sub / "train");
            st.test = data::load_dataset(sub / "test");
            st.transform = parse_transform(line, static_cast<std::size_t>(st.train.dim()));
            seq.sub_tasks.push_back(std::move(st));
        }
    }
    return seq;
}

}  // namespace replay_bench::clt
