#include "evosynth/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>

#include "evosynth/error.hpp"
#include "evosynth/rng.hpp"

namespace evosynth {

namespace {

constexpr std::uint64_t kSubsetSalt = 0x53554253ull;
constexpr std::uint64_t kBlobSalt = 0x424c4f42ull;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const char* field) {
  if (bytes.size() < offset + 4)
    throw FormatError(std::string("truncated header while reading ") + field, bytes.size());
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

// floor(fraction * count), tolerating decimal representation error.
std::size_t fraction_of(double fraction, std::size_t count) {
  const double exact = fraction * static_cast<double>(count);
  const double nearest = std::round(exact);
  return static_cast<std::size_t>(std::abs(exact - nearest) < 1e-9 ? nearest : std::floor(exact));
}

}  // namespace

RawImages parse_idx_images(const std::vector<std::uint8_t>& bytes) {
  const std::uint32_t magic = read_be32(bytes, 0, "magic");
  if (magic != kIdxImagesMagic)
    throw FormatError("expected image magic " + hex32(kIdxImagesMagic) + ", found " + hex32(magic), 0);
  RawImages out;
  out.count = read_be32(bytes, 4, "image count");
  out.rows = read_be32(bytes, 8, "row count");
  out.cols = read_be32(bytes, 12, "column count");
  if (out.rows == 0) throw FormatError("image rows must be positive", 8);
  if (out.cols == 0) throw FormatError("image columns must be positive", 12);
  if (out.count == 0) throw DataError("IDX image file holds no images");
  const std::size_t payload = out.count * out.rows * out.cols;
  constexpr std::size_t header = 16;
  if (bytes.size() < header + payload)
    throw FormatError("truncated image payload: expected " + std::to_string(payload) +
                          " bytes, found " + std::to_string(bytes.size() - header),
                      bytes.size());
  if (bytes.size() > header + payload)
    throw FormatError("trailing bytes after image payload", header + payload);
  out.pixels.assign(bytes.begin() + header, bytes.end());
  return out;
}

std::vector<std::uint8_t> parse_idx_labels(const std::vector<std::uint8_t>& bytes) {
  const std::uint32_t magic = read_be32(bytes, 0, "magic");
  if (magic != kIdxLabelsMagic)
    throw FormatError("expected label magic " + hex32(kIdxLabelsMagic) + ", found " + hex32(magic), 0);
  const std::size_t count = read_be32(bytes, 4, "label count");
  if (count == 0) throw DataError("IDX label file holds no labels");
  constexpr std::size_t header = 8;
  if (bytes.size() < header + count)
    throw FormatError("truncated label payload: expected " + std::to_string(count) +
                          " bytes, found " + std::to_string(bytes.size() - header),
                      bytes.size());
  if (bytes.size() > header + count) throw FormatError("trailing bytes after label payload", header + count);
  std::vector<std::uint8_t> labels(bytes.begin() + header, bytes.end());
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] > 9)
      throw FormatError("label " + std::to_string(labels[i]) + " outside 0..9", header + i);
  return labels;
}

RawImages load_idx_images(const std::filesystem::path& path) {
  try {
    return parse_idx_images(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path) {
  try {
    return parse_idx_labels(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

std::vector<std::uint8_t> encode_idx_images(const RawImages& images) {
  if (images.pixels.size() != images.count * images.rows * images.cols)
    throw ShapeError("pixel buffer does not match count x rows x cols");
  std::vector<std::uint8_t> out;
  out.reserve(16 + images.pixels.size());
  put_be32(out, kIdxImagesMagic);
  put_be32(out, static_cast<std::uint32_t>(images.count));
  put_be32(out, static_cast<std::uint32_t>(images.rows));
  put_be32(out, static_cast<std::uint32_t>(images.cols));
  out.insert(out.end(), images.pixels.begin(), images.pixels.end());
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  put_be32(out, kIdxLabelsMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

void write_idx_images(const std::filesystem::path& path, const RawImages& images) {
  write_file(path, encode_idx_images(images));
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
  write_file(path, encode_idx_labels(labels));
}

LabeledImages normalize(const RawImages& images, const std::vector<std::uint8_t>& labels) {
  if (images.count != labels.size())
    throw DataError(std::to_string(images.count) + " images but " + std::to_string(labels.size()) +
                    " labels");
  if (images.count == 0) throw DataError("dataset is empty");
  LabeledImages out;
  out.rows = images.rows;
  out.cols = images.cols;
  out.labels = labels;
  out.pixels.resize(images.pixels.size());
  std::transform(images.pixels.begin(), images.pixels.end(), out.pixels.begin(),
                 [](std::uint8_t b) { return static_cast<float>(b) / 255.0f; });
  return out;
}

RawImages quantize(const LabeledImages& data) {
  RawImages out;
  out.count = data.size();
  out.rows = data.rows;
  out.cols = data.cols;
  out.pixels.resize(data.pixels.size());
  std::transform(data.pixels.begin(), data.pixels.end(), out.pixels.begin(), [](float v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
  });
  return out;
}

LabeledImages stratified_subset(const LabeledImages& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ConfigError("subset fraction must lie in (0, 1], got " + std::to_string(fraction));
  std::array<std::vector<std::size_t>, 256> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);

  std::vector<std::size_t> chosen;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& pool = by_class[c];
    if (pool.empty()) continue;
    const std::size_t take = fraction_of(fraction, pool.size());
    CounterStream rs(make_key({seed, kSubsetSalt, c}));
    for (std::size_t i = 0; i < take; ++i) std::swap(pool[i], pool[i + rs.next_below(pool.size() - i)]);
    chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  }
  CounterStream mix(make_key({seed, kSubsetSalt, 0xFFFFull}));
  for (std::size_t i = chosen.size(); i > 1; --i) std::swap(chosen[i - 1], chosen[mix.next_below(i)]);

  LabeledImages out;
  out.rows = data.rows;
  out.cols = data.cols;
  out.labels.reserve(chosen.size());
  out.pixels.reserve(chosen.size() * data.image_size());
  for (std::size_t i : chosen) {
    out.labels.push_back(data.labels[i]);
    out.pixels.insert(out.pixels.end(), data.image(i), data.image(i) + data.image_size());
  }
  return out;
}

LabeledImages synthetic_blobs(int classes, int per_class, std::uint64_t seed) {
  if (classes < 2 || classes > 10) throw ConfigError("blob classes must lie in 2..10");
  if (per_class < 1) throw ConfigError("blob per_class must be >= 1");
  constexpr int kSize = 28;
  constexpr double kSigma = 2.0;
  // 4 x 3 grid of centers; the first `classes` are used.
  constexpr std::array<std::array<int, 2>, 12> kCenters = {{{5, 6}, {11, 6}, {17, 6}, {23, 6},
                                                            {5, 14}, {11, 14}, {17, 14}, {23, 14},
                                                            {5, 22}, {11, 22}, {17, 22}, {23, 22}}};
  LabeledImages out;
  out.rows = out.cols = kSize;
  const auto total = static_cast<std::size_t>(classes) * static_cast<std::size_t>(per_class);
  out.labels.reserve(total);
  out.pixels.reserve(total * kSize * kSize);
  for (std::size_t i = 0; i < total; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(classes));
    const auto [cx, cy] = kCenters[static_cast<std::size_t>(label)];
    CounterStream rs(make_key({seed, kBlobSalt, i}));
    for (int y = 0; y < kSize; ++y)
      for (int x = 0; x < kSize; ++x) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        const double v = std::exp(-d2 / (2.0 * kSigma * kSigma)) + 0.1 * rs.next_uniform();
        out.pixels.push_back(static_cast<float>(std::clamp(v, 0.0, 1.0)));
      }
    out.labels.push_back(static_cast<std::uint8_t>(label));
  }
  return out;
}

MnistFiles MnistFiles::in(const std::filesystem::path& dir) {
  return {dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte",
          dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte"};
}

}  // namespace evosynth
