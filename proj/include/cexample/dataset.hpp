#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cexample/container.hpp"
#include "cexample/error.hpp"
#include "cexample/network.hpp"
#include "cexample/random.hpp"
#include "cexample/tensor.hpp"

namespace cexample {

enum class Split { kTrain, kTest };

inline std::string_view to_string(Split s) { return s == Split::kTrain ? "train" : "test"; }

/// N labelled images stored contiguously as N x C x H x W with pixels in [0, 1].
struct Dataset {
  ImageShape shape;
  std::size_t num_classes = 0;
  Split split = Split::kTrain;
  std::vector<Real> pixels;
  std::vector<std::uint8_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }

  std::span<const Real> image(std::size_t i) const {
    return {pixels.data() + i * shape.size(), shape.size()};
  }
  std::span<Real> image(std::size_t i) { return {pixels.data() + i * shape.size(), shape.size()}; }
  std::size_t label(std::size_t i) const { return labels[i]; }

  Tensor image_tensor(std::size_t i) const {
    auto img = image(i);
    return Tensor(shape.to_shape(), std::vector<Real>(img.begin(), img.end()));
  }

  /// First `n` examples (or all, if fewer).
  Dataset head(std::size_t n) const {
    Dataset d{shape, num_classes, split, {}, {}};
    n = std::min(n, size());
    d.pixels.assign(pixels.begin(), pixels.begin() + static_cast<std::ptrdiff_t>(n * shape.size()));
    d.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n));
    return d;
  }
};

inline constexpr std::size_t kCifarRecordBytes = 1 + 3 * 32 * 32;
inline constexpr std::size_t kCifarRecordsPerBatch = 10000;

/// Parses records in the CIFAR-10 binary layout: one label byte followed by
/// C*H*W channel-major pixel bytes. Pixels scale by 1/255.
inline Dataset parse_cifar_records(std::string_view bytes, ImageShape shape, std::size_t classes, Split split,
                                   const std::string& source) {
  const std::size_t record = 1 + shape.size();
  if (bytes.empty() || bytes.size() % record != 0) {
    throw Error(ErrorKind::kCorruptDataset, source + ": " + std::to_string(bytes.size()) +
                                                " bytes is not a whole number of " + std::to_string(record) +
                                                "-byte records");
  }
  const std::size_t n = bytes.size() / record;
  Dataset d{shape, classes, split, std::vector<Real>(n * shape.size()), std::vector<std::uint8_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const auto* rec = reinterpret_cast<const unsigned char*>(bytes.data() + i * record);
    if (rec[0] >= classes) {
      throw Error(ErrorKind::kCorruptDataset, source + ": record " + std::to_string(i) + " has label " +
                                                  std::to_string(rec[0]));
    }
    d.labels[i] = rec[0];
    for (std::size_t j = 0; j < shape.size(); ++j) d.pixels[i * shape.size() + j] = rec[1 + j] / 255.0;
  }
  return d;
}

inline std::string encode_cifar_records(const Dataset& d) {
  std::string out;
  out.reserve(d.size() * (1 + d.shape.size()));
  for (std::size_t i = 0; i < d.size(); ++i) {
    out += static_cast<char>(d.labels[i]);
    for (Real v : d.image(i)) {
      out += static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
    }
  }
  return out;
}

inline void append(Dataset& into, const Dataset& from) {
  into.pixels.insert(into.pixels.end(), from.pixels.begin(), from.pixels.end());
  into.labels.insert(into.labels.end(), from.labels.begin(), from.labels.end());
}

inline std::vector<std::string> cifar10_train_files() {
  return {"data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin", "data_batch_4.bin", "data_batch_5.bin"};
}

/// Loads the CIFAR-10 binary distribution (data_batch_1..5.bin, test_batch.bin).
inline std::pair<Dataset, Dataset> load_cifar10(const std::filesystem::path& dir) {
  const ImageShape shape{3, 32, 32};
  auto load = [&](const std::string& name, Split split) {
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) {
      throw Error(ErrorKind::kCorruptDataset,
                  "missing " + path.string() +
                      " (expected data_batch_1.bin..data_batch_5.bin and test_batch.bin in " + dir.string() + ")");
    }
    const std::string bytes = read_file(path);
    if (bytes.size() != kCifarRecordBytes * kCifarRecordsPerBatch) {
      throw Error(ErrorKind::kCorruptDataset, path.string() + ": " + std::to_string(bytes.size()) + " bytes, expected " +
                                                  std::to_string(kCifarRecordBytes * kCifarRecordsPerBatch));
    }
    return parse_cifar_records(bytes, shape, 10, split, path.string());
  };
  Dataset train{shape, 10, Split::kTrain, {}, {}};
  for (const auto& f : cifar10_train_files()) append(train, load(f, Split::kTrain));
  Dataset test = load("test_batch.bin", Split::kTest);
  return {std::move(train), std::move(test)};
}

namespace detail {

/// Low-frequency 2-D cosine basis function with frequencies (fy, fx).
inline Real cosine_basis(std::size_t fy, std::size_t fx, std::size_t y, std::size_t x, std::size_t h,
                         std::size_t w) {
  using std::numbers::pi;
  return std::cos(pi * static_cast<Real>((2 * y + 1) * fy) / static_cast<Real>(2 * h)) *
         std::cos(pi * static_cast<Real>((2 * x + 1) * fx) / static_cast<Real>(2 * w));
}

inline constexpr std::array<std::pair<std::size_t, std::size_t>, 5> kPatternFrequencies{
    {{0, 1}, {1, 0}, {0, 2}, {1, 1}, {2, 0}}};

/// Class prototypes: per class and channel, signed weights on the five
/// lowest non-DC cosine modes. Fixed for a given class count so that train
/// and test splits drawn with different seeds share class definitions.
inline std::vector<Real> class_pattern_weights(std::size_t classes) {
  Rng rng(derive_seed(0x5eed, "synth.prototypes", classes));
  std::vector<Real> w(classes * 3 * kPatternFrequencies.size());
  for (auto& v : w) v = uniform01(rng) < 0.5 ? -1.0 : 1.0;
  for (auto& v : w) v *= 0.5 + 0.5 * uniform01(rng);
  return w;
}

}  // namespace detail

/// Synthetic class-conditional images. Class c is a fixed colored
/// low-frequency pattern (signed mix of the cosine modes with 1 <= i+j <= 2
/// per channel); each sample adds a random amplitude, per-channel brightness
/// offset, and i.i.d. pixel noise, then clips to [0, 1].
inline Dataset synth_dataset(std::uint64_t seed, std::size_t classes, std::size_t n, std::size_t height,
                             std::size_t width, Split split = Split::kTrain) {
  if (classes < 2 || classes > 256) throw Error(ErrorKind::kParameter, "synthetic data needs 2..256 classes");
  if (n < classes) throw Error(ErrorKind::kParameter, "synthetic data needs at least one image per class");
  if (height < 3 || width < 3) throw Error(ErrorKind::kParameter, "synthetic images must be at least 3x3");
  const ImageShape shape{3, height, width};
  const auto weights = detail::class_pattern_weights(classes);
  const std::size_t modes = detail::kPatternFrequencies.size();

  std::vector<Real> basis(modes * shape.plane());
  for (std::size_t m = 0; m < modes; ++m) {
    const auto [fy, fx] = detail::kPatternFrequencies[m];
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        basis[m * shape.plane() + y * width + x] = detail::cosine_basis(fy, fx, y, x, height, width);
      }
    }
  }

  constexpr Real kAmplitude = 0.22;
  constexpr Real kNoise = 0.12;
  Rng rng(seed);
  std::normal_distribution<Real> noise(0.0, kNoise);
  Dataset d{shape, classes, split, std::vector<Real>(n * shape.size()), std::vector<std::uint8_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % classes;
    d.labels[i] = static_cast<std::uint8_t>(label);
    const Real amp = kAmplitude * (0.7 + 0.6 * uniform01(rng));
    auto img = d.image(i);
    for (std::size_t c = 0; c < 3; ++c) {
      const Real brightness = 0.5 + uniform_symmetric(rng, 0.12);
      for (std::size_t p = 0; p < shape.plane(); ++p) {
        Real v = brightness;
        for (std::size_t m = 0; m < modes; ++m) {
          v += amp * weights[(label * 3 + c) * modes + m] * basis[m * shape.plane() + p];
        }
        v += noise(rng);
        img[c * shape.plane() + p] = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  // Interleaved labels are deterministic; shuffle so batches mix classes.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  Dataset out{shape, classes, split, std::vector<Real>(n * shape.size()), std::vector<std::uint8_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(d.image(order[i]).begin(), shape.size(), out.image(i).begin());
    out.labels[i] = d.labels[order[i]];
  }
  return out;
}

}  // namespace cexample
