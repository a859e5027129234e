#include <gtest/gtest.h>
#include <zlib.h>

#include <cstdlib>

#include "replay_bench/data.hpp"
#include "support/synthetic.hpp"

namespace data = replay_bench::data;
using replay_bench::ArgumentError;
using replay_bench::CorruptionError;
using replay_bench::FormatError;
using replay_bench::PairingError;
using replay_bench::ValidationError;

namespace {

std::vector<std::uint8_t> image_file(std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                                     std::vector<std::uint8_t> payload, std::uint32_t magic = 0x803) {
    std::vector<std::uint8_t> b;
    synthetic::put_be32(b, magic);
    synthetic::put_be32(b, count);
    synthetic::put_be32(b, rows);
    synthetic::put_be32(b, cols);
    b.insert(b.end(), payload.begin(), payload.end());
    return b;
}

std::vector<std::uint8_t> label_file(std::vector<std::uint8_t> labels) {
    std::vector<std::uint8_t> b;
    synthetic::put_be32(b, 0x801);
    synthetic::put_be32(b, static_cast<std::uint32_t>(labels.size()));
    b.insert(b.end(), labels.begin(), labels.end());
    return b;
}

std::vector<std::uint8_t> gzip(const std::vector<std::uint8_t>& in) {
    z_stream zs{};
    deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 16 + MAX_WBITS, 8, Z_DEFAULT_STRATEGY);
    std::vector<std::uint8_t> out(in.size() + 1024);
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    deflate(&zs, Z_FINISH);
    out.resize(zs.total_out);
    deflateEnd(&zs);
    return out;
}

}  // namespace

TEST(IdxImages, HandcraftedTwoByTwo) {
    const auto bytes = image_file(1, 2, 2, {0, 128, 255, 64});
    ASSERT_EQ(bytes.size(), 20u);  // 16-byte header + 4 pixels
    const auto raw = data::parse_idx_images(bytes);
    EXPECT_EQ(raw.count, 1u);
    EXPECT_EQ(raw.rows, 2u);
    EXPECT_EQ(raw.cols, 2u);
    EXPECT_EQ(raw.pixels, (std::vector<std::uint8_t>{0, 128, 255, 64}));
}

TEST(IdxImages, EmptyFile) {
    const auto raw = data::parse_idx_images(image_file(0, 28, 28, {}));
    EXPECT_EQ(raw.count, 0u);
    EXPECT_TRUE(raw.pixels.empty());
}

TEST(IdxImages, LabelMagicIsFormatError) {
    EXPECT_THROW(data::parse_idx_images(image_file(1, 2, 2, {1, 2, 3, 4}, 0x801)), FormatError);
}

TEST(IdxImages, TruncatedPayloadIsCorruption) {
    EXPECT_THROW(data::parse_idx_images(image_file(2, 2, 2, {1, 2, 3, 4, 5})), CorruptionError);
}

TEST(IdxImages, ShortHeaderIsFormatError) {
    const std::vector<std::uint8_t> bytes{0, 0, 8, 3, 0, 0};
    EXPECT_THROW(data::parse_idx_images(bytes), replay_bench::Error);
}

TEST(IdxLabels, Handcrafted) {
    EXPECT_EQ(data::parse_idx_labels(label_file({3, 7})), (std::vector<int>{3, 7}));
}

TEST(IdxLabels, Empty) { EXPECT_TRUE(data::parse_idx_labels(label_file({})).empty()); }

TEST(IdxLabels, OutOfRangeIsValidationError) {
    EXPECT_THROW(data::parse_idx_labels(label_file({3, 10})), ValidationError);
}

TEST(IdxLabels, ImageMagicIsFormatError) {
    EXPECT_THROW(data::parse_idx_labels(image_file(1, 1, 1, {0})), FormatError);
}

TEST(IdxFiles, GzipIsInflatedTransparently) {
    const auto dir = synthetic::temp_dir("gzip");
    const auto plain = image_file(1, 2, 2, {9, 8, 7, 6});
    synthetic::write_bytes(dir / "imgs.gz", gzip(plain));
    const auto raw = data::load_idx_images(dir / "imgs.gz");
    EXPECT_EQ(raw.pixels, (std::vector<std::uint8_t>{9, 8, 7, 6}));
}

TEST(IdxFiles, CorruptGzipIsCorruption) {
    const auto dir = synthetic::temp_dir("badgzip");
    auto z = gzip(image_file(1, 2, 2, {9, 8, 7, 6}));
    z.resize(z.size() / 2);
    synthetic::write_bytes(dir / "imgs.gz", z);
    EXPECT_THROW(data::load_idx_images(dir / "imgs.gz"), CorruptionError);
}

TEST(Normalize, DividesBy255) {
    data::RawImages raw;
    raw.count = 1;
    raw.rows = 1;
    raw.cols = 3;
    raw.pixels = {255, 0, 128};
    const auto m = data::normalize(raw);
    EXPECT_EQ(m(0, 0), 1.0f);
    EXPECT_EQ(m(0, 1), 0.0f);
    EXPECT_NEAR(m(0, 2), 0.50196, 1e-5);
}

TEST(Pairing, CountMismatchRaises) {
    replay_bench::Matrix images(100, 4);
    EXPECT_THROW(data::make_dataset(images, std::vector<int>(99, 0)), PairingError);
}

namespace {

struct Source {
    data::RawImages train, test;
    std::vector<int> train_labels, test_labels;
};

Source synthetic_source(std::size_t train_per_class, std::size_t test_per_class) {
    Source s;
    const auto tr = synthetic::raw_digits(train_per_class, 3);
    const auto te = synthetic::raw_digits(test_per_class, 4);
    s.train = data::parse_idx_images(synthetic::idx_images(tr));
    s.test = data::parse_idx_images(synthetic::idx_images(te));
    s.train_labels = tr.labels;
    s.test_labels = te.labels;
    return s;
}

}  // namespace

TEST(Splits, SizesAndDeterminism) {
    const auto s = synthetic_source(60, 10);  // 600 train, 100 test
    const data::SplitSpec spec{550, 50, 100, 7};
    const auto a = data::make_canonical_splits(s.train, s.train_labels, s.test, s.test_labels, spec);
    EXPECT_EQ(a.train.size(), 550u);
    EXPECT_EQ(a.val.size(), 50u);
    EXPECT_EQ(a.test.size(), 100u);
    const auto b = data::make_canonical_splits(s.train, s.train_labels, s.test, s.test_labels, spec);
    EXPECT_EQ(a.val_indices, b.val_indices);
    EXPECT_EQ(a.train_indices, b.train_indices);
    const auto c = data::make_canonical_splits(s.train, s.train_labels, s.test, s.test_labels, {550, 50, 100, 8});
    EXPECT_NE(a.val_indices, c.val_indices);

    // train and val partition the source
    std::vector<std::size_t> all = a.train_indices;
    all.insert(all.end(), a.val_indices.begin(), a.val_indices.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
}

TEST(Splits, ZeroValidation) {
    const auto s = synthetic_source(60, 10);
    const auto spec = data::SplitSpec::for_source(600, 100, 0);
    const auto a = data::make_canonical_splits(s.train, s.train_labels, s.test, s.test_labels, spec);
    EXPECT_EQ(a.train.size(), 600u);
    EXPECT_EQ(a.val.size(), 0u);
}

TEST(Splits, OversizedRequestIsArgumentError) {
    const auto s = synthetic_source(60, 10);
    EXPECT_THROW(data::make_canonical_splits(s.train, s.train_labels, s.test, s.test_labels, {600, 50, 100, 0}),
                 ArgumentError);
}

TEST(Splits, TestPassesThroughUntouched) {
    const auto s = synthetic_source(60, 10);
    const auto a = data::make_canonical_splits(s.train, s.train_labels, s.test, s.test_labels, {550, 50, 100, 0});
    EXPECT_EQ(a.test.labels, s.test_labels);
    EXPECT_TRUE(a.test.images.isApprox(data::normalize(s.test), 0.0f));
}

TEST(Cache, RoundTripIsBitExact) {
    const auto dir = synthetic::temp_dir("cache");
    const auto ds = synthetic::digits(3, 5);
    data::save_dataset(dir / "d", ds);
    const auto back = data::load_dataset(dir / "d");
    EXPECT_EQ(back.labels, ds.labels);
    ASSERT_EQ(back.images.rows(), ds.images.rows());
    EXPECT_EQ(0, std::memcmp(back.images.data(), ds.images.data(), sizeof(float) * ds.images.size()));
}

TEST(Discovery, LoadsDirectoryOfIdxFiles) {
    const auto dir = synthetic::temp_dir("discovery");
    synthetic::write_idx_dir(dir / "mnist", 60, 10);
    const auto root = data::resolve_dataset_dir(dir, "mnist");
    EXPECT_EQ(root, dir / "mnist");
    const auto splits = data::load_canonical_splits(root, 50, 0);
    EXPECT_EQ(splits.train.size(), 550u);
    EXPECT_EQ(splits.val.size(), 50u);
    EXPECT_EQ(splits.test.size(), 100u);
}

TEST(Discovery, MissingFileIsIoError) {
    const auto dir = synthetic::temp_dir("missing");
    EXPECT_THROW(data::load_source_files(dir), replay_bench::IoError);
}

// Real MNIST, when available.
TEST(Mnist, CanonicalSplitSizes) {
    const char* root = std::getenv("REPLAY_BENCH_DATA");
    if (!root || !*root) GTEST_SKIP() << "REPLAY_BENCH_DATA not set";
    const auto dir = data::resolve_dataset_dir(root, "mnist");
    const auto splits = data::load_canonical_splits(dir);
    EXPECT_EQ(splits.train.size(), 55000u);
    EXPECT_EQ(splits.val.size(), 5000u);
    EXPECT_EQ(splits.test.size(), 10000u);
    EXPECT_EQ(splits.train.dim(), 784);
    EXPECT_GE(splits.train.images.minCoeff(), 0.0f);
    EXPECT_LE(splits.train.images.maxCoeff(), 1.0f);
}
