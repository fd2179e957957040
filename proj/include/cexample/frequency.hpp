#pragma once

#include <Eigen/Core>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "cexample/dataset.hpp"
#include "cexample/error.hpp"
#include "cexample/network.hpp"
#include "cexample/tensor.hpp"

namespace cexample {

using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Orthonormal DCT-II basis: row k is s_k cos(pi (2n+1) k / 2N), s_0 = sqrt(1/N), s_k = sqrt(2/N).
inline const Matrix& dct_matrix(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, Matrix> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Matrix c(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const Real nn = static_cast<Real>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Real s = k == 0 ? std::sqrt(1.0 / nn) : std::sqrt(2.0 / nn);
    for (std::size_t i = 0; i < n; ++i) {
      c(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
          s * std::cos(std::numbers::pi * static_cast<Real>((2 * i + 1) * k) / (2.0 * nn));
    }
  }
  return cache.emplace(n, std::move(c)).first->second;
}

/// 2-D orthonormal DCT-II of an H x W matrix (separable: C_H X C_W^T).
inline Matrix dct2(const Matrix& x) {
  if (x.rows() < 1 || x.cols() < 1) throw Error(ErrorKind::kShape, "dct2 needs a non-empty matrix");
  const Matrix& ch = dct_matrix(static_cast<std::size_t>(x.rows()));
  const Matrix& cw = dct_matrix(static_cast<std::size_t>(x.cols()));
  return ch * x * cw.transpose();
}

/// Inverse of dct2 (C_H^T W C_W).
inline Matrix idct2(const Matrix& w) {
  if (w.rows() < 1 || w.cols() < 1) throw Error(ErrorKind::kShape, "idct2 needs a non-empty matrix");
  const Matrix& ch = dct_matrix(static_cast<std::size_t>(w.rows()));
  const Matrix& cw = dct_matrix(static_cast<std::size_t>(w.cols()));
  return ch.transpose() * w * cw;
}

/// Per-channel coefficient matrices of a C x H x W image.
struct FrequencyGrid {
  std::vector<Matrix> channels;
  static constexpr std::string_view kConvention = "dct-ii-orthonormal";

  std::size_t height() const { return channels.empty() ? 0 : static_cast<std::size_t>(channels[0].rows()); }
  std::size_t width() const { return channels.empty() ? 0 : static_cast<std::size_t>(channels[0].cols()); }
};

inline ImageShape image_shape_of(const Tensor& x) {
  if (x.shape().size() != 3) {
    throw Error(ErrorKind::kShape, "expected a C x H x W image, got " + shape_string(x.shape()));
  }
  return {x.shape()[0], x.shape()[1], x.shape()[2]};
}

inline FrequencyGrid to_frequency(std::span<const Real> image, ImageShape s) {
  FrequencyGrid g;
  for (std::size_t c = 0; c < s.channels; ++c) {
    Eigen::Map<const Matrix> plane(image.data() + c * s.plane(), static_cast<Eigen::Index>(s.height),
                                   static_cast<Eigen::Index>(s.width));
    g.channels.push_back(dct2(plane));
  }
  return g;
}

inline FrequencyGrid to_frequency(const Tensor& image) { return to_frequency(image.values(), image_shape_of(image)); }

inline Tensor from_frequency(const FrequencyGrid& g) {
  const ImageShape s{g.channels.size(), g.height(), g.width()};
  Tensor out(s.to_shape());
  for (std::size_t c = 0; c < s.channels; ++c) {
    Eigen::Map<Matrix>(out.data() + c * s.plane(), static_cast<Eigen::Index>(s.height),
                       static_cast<Eigen::Index>(s.width)) = idct2(g.channels[c]);
  }
  return out;
}

/// Binary H x W mask that zeroes the low-frequency band 1 <= i+j <= k.
/// With `zero_dc`, (0,0) is zeroed as well.
struct HighPassMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t band = 0;
  bool zero_dc = false;
  Matrix keep;

  std::size_t zero_count() const { return static_cast<std::size_t>((keep.array() == 0.0).count()); }
  bool masked(std::size_t i, std::size_t j) const {
    return keep(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) == 0.0;
  }
};

inline HighPassMask make_highpass_mask(std::size_t height, std::size_t width, std::size_t band, bool zero_dc = false) {
  if (height < 1 || width < 1) throw Error(ErrorKind::kParameter, "mask dimensions must be positive");
  if (band >= height + width - 1 && band > 0) {
    throw Error(ErrorKind::kParameter, "band size " + std::to_string(band) + " must be < H+W-1 = " +
                                           std::to_string(height + width - 1));
  }
  HighPassMask m{height, width, band, zero_dc,
                 Matrix::Ones(static_cast<Eigen::Index>(height), static_cast<Eigen::Index>(width))};
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      const std::size_t s = i + j;
      if ((s >= 1 && s <= band) || (zero_dc && s == 0)) {
        m.keep(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 0.0;
      }
    }
  }
  return m;
}

/// HighPass(x) = IDCT(mask * DCT(x)) per channel. No clipping.
inline Tensor apply_highpass(const Tensor& image, const HighPassMask& mask) {
  const ImageShape s = image_shape_of(image);
  if (s.height != mask.height || s.width != mask.width) {
    throw Error(ErrorKind::kShape, "mask is " + std::to_string(mask.height) + "x" + std::to_string(mask.width) +
                                       ", image is " + to_string(s));
  }
  FrequencyGrid g = to_frequency(image);
  for (auto& ch : g.channels) ch = ch.cwiseProduct(mask.keep);
  return from_frequency(g);
}

inline Tensor apply_highpass(const Tensor& image, std::size_t band, bool zero_dc = false) {
  const ImageShape s = image_shape_of(image);
  if (band == 0 && !zero_dc) return image;
  return apply_highpass(image, make_highpass_mask(s.height, s.width, band, zero_dc));
}

/// Mean over images of |dLoss/dw| per channel, where w = DCT(x). With the
/// orthonormal convention dLoss/dw = DCT(dLoss/dx).
inline std::vector<Matrix> frequency_saliency(const Network& net, const Dataset& images, std::size_t n) {
  if (n < 1) throw Error(ErrorKind::kParameter, "saliency needs at least one image");
  if (images.size() < n) {
    throw Error(ErrorKind::kEmptyInput, "saliency requested " + std::to_string(n) + " images, dataset has " +
                                            std::to_string(images.size()));
  }
  const ImageShape s = net.input_shape();
  std::vector<Matrix> sum(s.channels, Matrix::Zero(static_cast<Eigen::Index>(s.height), static_cast<Eigen::Index>(s.width)));
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor g = input_gradient(net, images.image(i), images.label(i));
    const FrequencyGrid fg = to_frequency(g.values(), s);
    for (std::size_t c = 0; c < s.channels; ++c) sum[c] += fg.channels[c].cwiseAbs();
  }
  for (auto& m : sum) m /= static_cast<Real>(n);
  return sum;
}

/// Mean saliency over coefficients with i+j <= cutoff and over the rest.
inline std::pair<Real, Real> band_means(const std::vector<Matrix>& saliency, std::size_t cutoff) {
  Real low = 0.0, high = 0.0;
  std::size_t nl = 0, nh = 0;
  for (const auto& m : saliency) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (static_cast<std::size_t>(i + j) <= cutoff) {
          low += m(i, j);
          ++nl;
        } else {
          high += m(i, j);
          ++nh;
        }
      }
    }
  }
  return {nl ? low / static_cast<Real>(nl) : 0.0, nh ? high / static_cast<Real>(nh) : 0.0};
}

}  // namespace cexample
