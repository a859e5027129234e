#include <gtest/gtest.h>

#include <cstdlib>
#include <numbers>

#include "replay_bench/clt.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

namespace clt = replay_bench::clt;
namespace data = replay_bench::data;
using replay_bench::ArgumentError;
using replay_bench::Rng;

namespace {

std::vector<float> random_image(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> img(784);
    for (auto& v : img) v = static_cast<float>(rng.uniform());
    return img;
}

}  // namespace

TEST(Permutation, IdentityLeavesImageUnchanged) {
    const auto img = random_image(1);
    EXPECT_EQ(clt::apply_permutation(img, clt::identity_permutation(784)), img);
}

TEST(Permutation, InverseRestores) {
    const auto img = random_image(2);
    const auto perm = clt::random_permutation(784, 11);
    const auto inv = clt::invert_permutation(perm);
    EXPECT_EQ(clt::apply_permutation(clt::apply_permutation(img, perm), inv), img);
}

TEST(Permutation, PreservesValueMultiset) {
    auto img = random_image(3);
    auto out = clt::apply_permutation(img, clt::random_permutation(784, 12));
    std::sort(img.begin(), img.end());
    std::sort(out.begin(), out.end());
    EXPECT_EQ(img, out);
}

TEST(Permutation, SwapMovesBasisVector) {
    auto perm = clt::identity_permutation(784);
    std::swap(perm[0], perm[783]);
    std::vector<float> e0(784, 0.0f);
    e0[0] = 1.0f;
    const auto out = clt::apply_permutation(e0, perm);
    std::vector<float> e783(784, 0.0f);
    e783[783] = 1.0f;
    EXPECT_EQ(out, e783);
}

TEST(Permutation, NonBijectionRejected) {
    auto perm = clt::identity_permutation(784);
    perm[5] = 6;
    EXPECT_THROW(clt::apply_permutation(random_image(4), perm), ArgumentError);
}

TEST(Permutation, SeededAndDistinct) {
    EXPECT_EQ(clt::random_permutation(784, 5), clt::random_permutation(784, 5));
    EXPECT_NE(clt::random_permutation(784, 5), clt::random_permutation(784, 6));
    EXPECT_TRUE(clt::is_bijection(clt::random_permutation(784, 5)));
}

TEST(Rotation, ZeroAngleIsIdentity) {
    const auto img = random_image(5);
    EXPECT_EQ(clt::apply_rotation(img, 0.0), img);
}

TEST(Rotation, CentreBlockIsFixedUnderQuarterTurn) {
    std::vector<float> img(784, 0.0f);
    for (int r : {13, 14})
        for (int c : {13, 14}) img[static_cast<std::size_t>(r * 28 + c)] = 1.0f;
    const auto out = clt::apply_rotation(img, std::numbers::pi / 2);
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(out[i], img[i], 1e-6) << "pixel " << i;
}

TEST(Rotation, QuarterTurnIsExactPixelPermutation) {
    const auto img = random_image(6);
    const auto out = clt::apply_rotation(img, std::numbers::pi / 2);
    for (int r = 0; r < 28; ++r)
        for (int c = 0; c < 28; ++c)
            EXPECT_NEAR(out[static_cast<std::size_t>(r * 28 + c)], img[static_cast<std::size_t>((27 - c) * 28 + r)], 1e-6);
}

TEST(Rotation, MatchesIndependentReference) {
    for (std::uint64_t seed : {7, 8, 9}) {
        const auto img = random_image(seed);
        for (double angle : {0.3, 1.0, 1.4}) {
            const auto a = clt::apply_rotation(img, angle);
            const auto b = oracle::rotate_reference(img, angle);
            for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], 1e-6) << "angle " << angle;
        }
    }
}

TEST(Rotation, OutputClampedToUnitInterval) {
    const auto out = clt::apply_rotation(std::vector<float>(784, 1.0f), 0.7);
    for (float v : out) {
        EXPECT_GE(v, 0.0f);
        EXPECT_LE(v, 1.0f);
    }
}

TEST(Disjoint, OneClassPerSubTask) {
    const auto train = synthetic::digits(7, 1);
    const auto test = synthetic::digits(3, 2);
    const auto seq = clt::build_disjoint(train, test);
    ASSERT_EQ(seq.size(), 10u);
    for (int t = 0; t < 10; ++t) {
        const auto& st = seq.sub_tasks[static_cast<std::size_t>(t)];
        EXPECT_EQ(st.index, t);
        EXPECT_EQ(st.train.size(), 7u);
        EXPECT_EQ(st.test.size(), 3u);
        for (int l : st.train.labels) EXPECT_EQ(l, t);
        EXPECT_EQ(st.classes(), std::vector<int>{t});
    }
}

TEST(Disjoint, CustomOrderAndTestPartition) {
    const auto train = synthetic::digits(4, 1);
    const auto test = synthetic::digits(5, 2);
    const std::vector<int> order{3, 1, 4, 0, 5, 9, 2, 6, 8, 7};
    const auto seq = clt::build_disjoint(train, test, order);
    for (std::size_t t = 0; t < order.size(); ++t) EXPECT_EQ(seq.sub_tasks[t].train.labels.front(), order[t]);
    const auto whole = seq.whole_test_set();
    EXPECT_EQ(whole.size(), test.size());
    EXPECT_EQ(whole.class_counts(), test.class_counts());
}

TEST(Disjoint, NonPermutationOrderRejected) {
    const auto ds = synthetic::digits(2, 1);
    const std::vector<int> bad{0, 1, 2, 3, 4, 5, 6, 7, 8, 8};
    EXPECT_THROW(clt::build_disjoint(ds, ds, bad), ArgumentError);
    const std::vector<int> short_order{0, 1};
    EXPECT_THROW(clt::build_disjoint(ds, ds, short_order), ArgumentError);
}

TEST(Rotations, SubTaskZeroIdentityAndFullSize) {
    const auto train = synthetic::digits(5, 1);
    const auto test = synthetic::digits(2, 2);
    const auto seq = clt::build_rotations(train, test, 5, 42);
    ASSERT_EQ(seq.size(), 5u);
    EXPECT_TRUE(seq.sub_tasks[0].train.images.isApprox(train.images, 0.0f));
    for (const auto& st : seq.sub_tasks) {
        EXPECT_EQ(st.train.size(), train.size());
        EXPECT_EQ(st.test.size(), test.size());
        EXPECT_EQ(st.classes().size(), 10u);
    }
    for (int t = 1; t < 5; ++t) {
        const auto& r = std::get<clt::Rotation>(seq.sub_tasks[static_cast<std::size_t>(t)].transform);
        EXPECT_GE(r.angle, 0.0);
        EXPECT_LE(r.angle, std::numbers::pi / 2);
    }
}

TEST(Rotations, EqualSeedsGiveIdenticalData) {
    const auto train = synthetic::digits(3, 1);
    const auto a = clt::build_rotations(train, train, 3, 9);
    const auto b = clt::build_rotations(train, train, 3, 9);
    for (std::size_t t = 0; t < 3; ++t) EXPECT_TRUE(a.sub_tasks[t].train.images == b.sub_tasks[t].train.images);
    const auto c = clt::build_rotations(train, train, 3, 10);
    EXPECT_FALSE(a.sub_tasks[1].train.images == c.sub_tasks[1].train.images);
}

TEST(Permutations, SubTaskImagesArePermutedSource) {
    const auto train = synthetic::digits(3, 1);
    const auto seq = clt::build_permutations(train, train, 4, 5);
    EXPECT_TRUE(seq.sub_tasks[0].train.images == train.images);
    for (std::size_t t = 1; t < 4; ++t) {
        const auto& p = std::get<clt::Permutation>(seq.sub_tasks[t].transform);
        const auto inv = clt::invert_permutation(p.perm);
        const replay_bench::Matrix row = seq.sub_tasks[t].train.images.row(0);
        const std::vector<float> img(row.data(), row.data() + 784);
        const auto back = clt::apply_permutation(img, inv);
        for (int i = 0; i < 784; ++i) EXPECT_EQ(back[static_cast<std::size_t>(i)], train.images(0, i));
        EXPECT_EQ(seq.sub_tasks[t].train.labels, train.labels);
    }
}

TEST(Cache, SaveLoadRoundTrip) {
    const auto dir = synthetic::temp_dir("clt_cache");
    const auto train = synthetic::digits(2, 1);
    const auto seq = clt::build_permutations(train, train, 3, 4);
    clt::save_task_sequence(dir, seq);
    const auto back = clt::load_task_sequence(dir);
    ASSERT_EQ(back.size(), seq.size());
    EXPECT_EQ(back.kind, seq.kind);
    EXPECT_EQ(back.seed, seq.seed);
    for (std::size_t t = 0; t < seq.size(); ++t) {
        EXPECT_TRUE(back.sub_tasks[t].train.images == seq.sub_tasks[t].train.images);
        EXPECT_EQ(back.sub_tasks[t].test.labels, seq.sub_tasks[t].test.labels);
    }
}

TEST(Mnist, DisjointClassThreeCounts) {
    const char* root = std::getenv("REPLAY_BENCH_DATA");
    if (!root || !*root) GTEST_SKIP() << "REPLAY_BENCH_DATA not set";
    const auto dir = data::resolve_dataset_dir(root, "mnist");
    // the full 60,000-image train file holds 6131 threes
    const auto full = data::load_canonical_splits(dir, 0);
    const auto seq_full = clt::build_disjoint(full.train, full.test);
    EXPECT_EQ(seq_full.sub_tasks[3].train.size(), 6131u);
    // with the 55,000 / 5,000 split every class keeps roughly 5,500 train and 1,000 test samples
    const auto split = data::load_canonical_splits(dir);
    const auto seq = clt::build_disjoint(split.train, split.test);
    std::size_t total = 0;
    for (const auto& st : seq.sub_tasks) {
        EXPECT_GT(st.train.size(), 4500u);
        EXPECT_LT(st.train.size(), 6500u);
        EXPECT_GT(st.test.size(), 850u);
        EXPECT_LT(st.test.size(), 1150u);
        total += st.train.size();
    }
    EXPECT_EQ(total, 55000u);
}
