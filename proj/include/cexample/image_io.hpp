#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <utility>
#include <filesystem>
#include <vector>

#include "cexample/error.hpp"
#include "cexample/fingerprint.hpp"
#include "cexample/frequency.hpp"

namespace cexample {

/// 8-bit RGB raster.
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage(std::size_t w, std::size_t h, std::uint8_t fill = 0) : width(w), height(h), pixels(w * h * 3, fill) {}

  void set(std::size_t x, std::size_t y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto* p = &pixels[(y * width + x) * 3];
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }
};

inline std::uint8_t to_byte(Real v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

namespace detail {

/// Returns false on a libpng error. Kept free of non-trivial locals so the
/// longjmp back into setjmp is well defined.
inline bool png_write_rows(std::FILE* file, const RgbImage& img, png_bytep* rows, png_text* chunks, int nchunks) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    return false;
  }
  png_init_io(png, file);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (nchunks > 0) png_set_text(png, info, chunks, nchunks);
  png_set_rows(png, info, rows);
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace detail

/// Writes an 8-bit RGB PNG; `text` entries become tEXt chunks.
inline void write_png(const std::filesystem::path& path, const RgbImage& img,
                      const std::vector<std::pair<std::string, std::string>>& text = {}) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::vector<png_text> chunks(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    chunks[i].compression = PNG_TEXT_COMPRESSION_NONE;
    chunks[i].key = const_cast<char*>(text[i].first.c_str());
    chunks[i].text = const_cast<char*>(text[i].second.c_str());
    chunks[i].text_length = text[i].second.size();
  }
  std::vector<png_bytep> rows(img.height);
  for (std::size_t y = 0; y < img.height; ++y) rows[y] = const_cast<png_bytep>(&img.pixels[y * img.width * 3]);
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file || !detail::png_write_rows(file.get(), img, rows.data(), chunks.data(), static_cast<int>(chunks.size()))) {
    throw Error(ErrorKind::kIo, "cannot write " + path.string());
  }
}

/// Grid of fingerprint images (clamped to [0,1] for display), 1 px gutters.
inline RgbImage contact_sheet(const FingerprintSet& set, std::size_t columns = 10) {
  if (set.examples.empty()) return RgbImage(1, 1);
  const Shape& s = set.examples.front().image.shape();
  const std::size_t h = s[1], w = s[2], c = s[0];
  columns = std::min(columns, set.examples.size());
  const std::size_t rows = (set.examples.size() + columns - 1) / columns;
  RgbImage sheet(columns * (w + 1) + 1, rows * (h + 1) + 1, 255);
  for (std::size_t n = 0; n < set.examples.size(); ++n) {
    const Tensor& img = set.examples[n].image;
    const std::size_t ox = (n % columns) * (w + 1) + 1, oy = (n / columns) * (h + 1) + 1;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        auto at = [&](std::size_t ch) { return to_byte(img[(std::min(ch, c - 1) * h + y) * w + x]); };
        sheet.set(ox + x, oy + y, at(0), at(1), at(2));
      }
    }
  }
  return sheet;
}

/// Channels side by side, each scaled by its own maximum (white = largest).
inline RgbImage saliency_heatmap(const std::vector<Matrix>& maps, std::size_t scale = 4) {
  if (maps.empty()) return RgbImage(1, 1);
  const std::size_t h = static_cast<std::size_t>(maps[0].rows()), w = static_cast<std::size_t>(maps[0].cols());
  RgbImage out(maps.size() * (w * scale + 2), h * scale, 255);
  for (std::size_t c = 0; c < maps.size(); ++c) {
    const Real peak = std::max(maps[c].maxCoeff(), 1e-300);
    for (std::size_t y = 0; y < h * scale; ++y) {
      for (std::size_t x = 0; x < w * scale; ++x) {
        const Real v = maps[c](static_cast<Eigen::Index>(y / scale), static_cast<Eigen::Index>(x / scale)) / peak;
        const std::uint8_t b = to_byte(v);
        out.set(c * (w * scale + 2) + x, y, b, static_cast<std::uint8_t>(b / 2), static_cast<std::uint8_t>(255 - b));
      }
    }
  }
  return out;
}

}  // namespace cexample
