#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace evosynth {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

// Images as stored in an IDX file: count x rows x cols unsigned bytes, row-major.
struct RawImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;
};

// Normalized images (pixel / 255 for IDX data) with labels 0..9.
struct LabeledImages {
  std::size_t rows = 28;
  std::size_t cols = 28;
  std::vector<float> pixels;  // size() * rows * cols
  std::vector<std::uint8_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t image_size() const noexcept { return rows * cols; }
  const float* image(std::size_t i) const noexcept { return pixels.data() + i * image_size(); }
};

// Throws FormatError (with byte offset) on bad magic, dims or truncation;
// DataError when the file holds zero images or cannot be opened.
RawImages load_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path);

RawImages parse_idx_images(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> parse_idx_labels(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> encode_idx_images(const RawImages& images);
std::vector<std::uint8_t> encode_idx_labels(const std::vector<std::uint8_t>& labels);
void write_idx_images(const std::filesystem::path& path, const RawImages& images);
void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);

LabeledImages normalize(const RawImages& images, const std::vector<std::uint8_t>& labels);
// Inverse of normalize: round(pixel * 255) clamped to a byte.
RawImages quantize(const LabeledImages& data);

// Per class, floor(fraction * class_count) items drawn uniformly without
// replacement, then shuffled. Deterministic in seed.
LabeledImages stratified_subset(const LabeledImages& data, double fraction, std::uint64_t seed);

// Gaussian blobs (sigma 2 px) at distinct fixed grid centers plus uniform noise
// in [0, 0.1], clamped to [0, 1]. classes in 2..10, per_class >= 1.
LabeledImages synthetic_blobs(int classes, int per_class, std::uint64_t seed);

// MNIST files under `dir` with their conventional names.
struct MnistFiles {
  std::filesystem::path train_images, train_labels, test_images, test_labels;
  static MnistFiles in(const std::filesystem::path& dir);
};

}  // namespace evosynth
