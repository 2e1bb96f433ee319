#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"
#include "evosynth/dataset.hpp"
#include "evosynth/error.hpp"
#include "evosynth/rng.hpp"
#include "test_util.hpp"

using namespace evosynth;

namespace {

// Independent byte-level IDX writer.
void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::vector<std::uint8_t> craft_images(std::uint32_t n, std::uint32_t rows, std::uint32_t cols,
                                       std::uint32_t magic = 0x803) {
  std::vector<std::uint8_t> out;
  put_be32(out, magic);
  put_be32(out, n);
  put_be32(out, rows);
  put_be32(out, cols);
  for (std::uint32_t i = 0; i < n * rows * cols; ++i) out.push_back(static_cast<std::uint8_t>((i * 37 + 11) % 256));
  return out;
}

std::vector<std::uint8_t> craft_labels(const std::vector<std::uint8_t>& labels, std::uint32_t magic = 0x801) {
  std::vector<std::uint8_t> out;
  put_be32(out, magic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

std::size_t format_offset(auto&& fn) {
  try {
    fn();
  } catch (const FormatError& e) {
    return e.offset();
  }
  FAIL("no FormatError raised");
  return 0;
}

LabeledImages balanced(int classes, int per_class) {
  LabeledImages d;
  for (int i = 0; i < classes * per_class; ++i) {
    d.labels.push_back(static_cast<std::uint8_t>(i % classes));
    for (int p = 0; p < 784; ++p) d.pixels.push_back(static_cast<float>(i) / 10000.0f);
  }
  return d;
}

std::map<int, int> class_counts(const LabeledImages& d) {
  std::map<int, int> counts;
  for (auto y : d.labels) ++counts[y];
  return counts;
}


}  // namespace

TEST_CASE("IDX images parse against a hand-built file") {
  const auto bytes = craft_images(2, 28, 28);
  const RawImages img = parse_idx_images(bytes);
  CHECK(img.count == 2);
  CHECK(img.rows == 28);
  CHECK(img.cols == 28);
  REQUIRE(img.pixels.size() == 2 * 28 * 28);
  CHECK(std::equal(img.pixels.begin(), img.pixels.end(), bytes.begin() + 16));
  CHECK(encode_idx_images(img) == bytes);
}

TEST_CASE("IDX image format errors carry byte offsets") {
  CHECK(format_offset([] { parse_idx_images(craft_images(2, 28, 28, 0x801)); }) == 0);
  auto truncated = craft_images(2, 28, 28);
  truncated.resize(16 + 2 * 784 - 5);
  CHECK(format_offset([&] { parse_idx_images(truncated); }) == truncated.size());
  CHECK(format_offset([] { parse_idx_images({0, 0, 8}); }) == 3);
  CHECK(format_offset([] { parse_idx_images(craft_images(1, 0, 28)); }) == 8);
  CHECK(format_offset([] { parse_idx_images(craft_images(1, 28, 0)); }) == 12);
  auto trailing = craft_images(1, 2, 2);
  trailing.push_back(0);
  CHECK_THROWS_AS(parse_idx_images(trailing), FormatError);
  CHECK_THROWS_AS(parse_idx_images(craft_images(0, 28, 28)), DataError);
}

TEST_CASE("IDX labels") {
  CHECK(parse_idx_labels(craft_labels({7, 2, 1})) == std::vector<std::uint8_t>{7, 2, 1});
  CHECK(encode_idx_labels({7, 2, 1}) == craft_labels({7, 2, 1}));
  CHECK(format_offset([] { parse_idx_labels(craft_labels({1, 12, 3})); }) == 9);
  CHECK(format_offset([] { parse_idx_labels(craft_labels({1}, 0x803)); }) == 0);
  auto truncated = craft_labels({1, 2, 3});
  truncated.pop_back();
  CHECK(format_offset([&] { parse_idx_labels(truncated); }) == truncated.size());
  CHECK_THROWS_AS(parse_idx_labels(craft_labels({})), DataError);
  CHECK_FALSE(std::is_base_of_v<FormatError, ParseError>);
}

TEST_CASE("IDX files on disk") {
  test::TempDir dir;
  const auto images = dir.path / "img.idx";
  const auto labels = dir.path / "lbl.idx";
  const auto bytes = craft_images(3, 4, 5);
  {
    std::ofstream out(images, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  write_idx_labels(labels, {0, 9, 4});
  const RawImages img = load_idx_images(images);
  CHECK(img.count == 3);
  CHECK(load_idx_labels(labels) == std::vector<std::uint8_t>{0, 9, 4});
  CHECK_THROWS_AS(load_idx_images(dir.path / "missing"), DataError);

  const auto files = MnistFiles::in(dir.path);
  CHECK(files.train_images.filename() == "train-images-idx3-ubyte");
  CHECK(files.test_labels.filename() == "t10k-labels-idx1-ubyte");
}

TEST_CASE("normalization maps bytes to [0, 1] and quantize inverts it") {
  const RawImages raw = parse_idx_images(craft_images(3, 28, 28));
  const std::vector<std::uint8_t> labels{1, 2, 3};
  const LabeledImages d = normalize(raw, labels);
  CHECK(d.size() == 3);
  for (std::size_t i = 0; i < raw.pixels.size(); ++i) CHECK(d.pixels[i] == static_cast<float>(raw.pixels[i] / 255.0));
  CHECK(quantize(d).pixels == raw.pixels);
  CHECK_THROWS_AS(normalize(raw, {1, 2}), DataError);
}

TEST_CASE("IDX round trip of generated data is byte-exact") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const LabeledImages d = synthetic_blobs(10, 3, seed);
    const RawImages raw = quantize(d);
    const auto img_bytes = encode_idx_images(raw);
    const auto lbl_bytes = encode_idx_labels(d.labels);
    const RawImages back = parse_idx_images(img_bytes);
    CHECK(back.pixels == raw.pixels);
    CHECK(parse_idx_labels(lbl_bytes) == d.labels);
    CHECK(encode_idx_images(back) == img_bytes);
    CHECK(quantize(normalize(back, d.labels)).pixels == raw.pixels);
  }
}

TEST_CASE("stratified subset") {
  const LabeledImages d = balanced(10, 100);

  const LabeledImages tenth = stratified_subset(d, 0.1, 5);
  CHECK(tenth.size() == 100);
  for (const auto& [label, count] : class_counts(tenth)) CHECK(count == 10);

  // Every chosen image is a distinct input image with its own label.
  std::vector<float> firsts;
  for (std::size_t i = 0; i < tenth.size(); ++i) {
    const int source = static_cast<int>(std::lround(tenth.image(i)[0] * 10000.0f));
    CHECK(source % 10 == tenth.labels[i]);
    firsts.push_back(tenth.image(i)[0]);
  }
  std::sort(firsts.begin(), firsts.end());
  CHECK(std::adjacent_find(firsts.begin(), firsts.end()) == firsts.end());

  const LabeledImages all = stratified_subset(d, 1.0, 5);
  CHECK(all.size() == d.size());
  std::vector<float> a, b;
  for (std::size_t i = 0; i < d.size(); ++i) {
    a.push_back(all.image(i)[0]);
    b.push_back(d.image(i)[0]);
  }
  std::sort(a.begin(), a.end());
  CHECK(a == b);

  const LabeledImages again = stratified_subset(d, 0.1, 5);
  CHECK(again.pixels == tenth.pixels);
  CHECK(again.labels == tenth.labels);
  CHECK(stratified_subset(d, 0.1, 6).labels.size() == 100);

  CHECK_THROWS_AS(stratified_subset(d, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(stratified_subset(d, 1.5, 1), ConfigError);
}

TEST_CASE("stratified subset keeps class proportions within one item") {
  CounterStream rs(make_key({606}));
  for (int t = 0; t < 50; ++t) {
    LabeledImages d;
    const int n = 20 + static_cast<int>(rs.next_below(200));
    for (int i = 0; i < n; ++i) {
      d.labels.push_back(static_cast<std::uint8_t>(rs.next_below(10)));
      d.pixels.insert(d.pixels.end(), 784, 0.5f);
    }
    const double fraction = 0.05 + 0.95 * rs.next_uniform();
    const LabeledImages s = stratified_subset(d, fraction, static_cast<std::uint64_t>(t));
    const auto before = class_counts(d);
    const auto after = class_counts(s);
    for (const auto& [label, count] : before) {
      const double ideal = fraction * count;
      const int got = after.count(label) ? after.at(label) : 0;
      CHECK(std::abs(got - ideal) <= 1.0);
    }
  }
}

TEST_CASE("synthetic blobs") {
  const LabeledImages d = synthetic_blobs(10, 10, 42);
  CHECK(d.size() == 100);
  CHECK(d.pixels.size() == 100 * 784);
  for (const auto& [label, count] : class_counts(d)) CHECK(count == 10);
  for (float p : d.pixels) {
    CHECK(p >= 0.0f);
    CHECK(p <= 1.0f);
  }
  const LabeledImages same = synthetic_blobs(10, 10, 42);
  CHECK(same.pixels == d.pixels);
  CHECK(same.labels == d.labels);
  CHECK(synthetic_blobs(10, 10, 43).pixels != d.pixels);

  // Each class mean peaks at a distinct position.
  std::vector<std::size_t> peaks;
  for (int c = 0; c < 10; ++c) {
    std::array<double, 784> mean{};
    for (std::size_t i = 0; i < d.size(); ++i)
      if (d.labels[i] == c)
        for (std::size_t p = 0; p < 784; ++p) mean[p] += d.image(i)[p];
    peaks.push_back(static_cast<std::size_t>(std::max_element(mean.begin(), mean.end()) - mean.begin()));
  }
  std::sort(peaks.begin(), peaks.end());
  CHECK(std::adjacent_find(peaks.begin(), peaks.end()) == peaks.end());

  CHECK(synthetic_blobs(2, 1, 0).size() == 2);
  CHECK_THROWS_AS(synthetic_blobs(1, 5, 0), ConfigError);
  CHECK_THROWS_AS(synthetic_blobs(11, 5, 0), ConfigError);
  CHECK_THROWS_AS(synthetic_blobs(10, 0, 0), ConfigError);
}
