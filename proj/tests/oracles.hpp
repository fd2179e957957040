#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>

#include "cexample/frequency.hpp"

namespace oracle {

using cexample::Matrix;
using cexample::Real;

/// Orthonormal 2-D DCT-II straight from the double-sum definition, O(N^4).
inline Matrix naive_dct2(const Matrix& x) {
  const auto h = x.rows(), w = x.cols();
  auto scale = [](Eigen::Index k, Eigen::Index n) {
    return k == 0 ? std::sqrt(1.0 / static_cast<Real>(n)) : std::sqrt(2.0 / static_cast<Real>(n));
  };
  Matrix out(h, w);
  for (Eigen::Index u = 0; u < h; ++u) {
    for (Eigen::Index v = 0; v < w; ++v) {
      Real sum = 0.0;
      for (Eigen::Index i = 0; i < h; ++i) {
        for (Eigen::Index j = 0; j < w; ++j) {
          sum += x(i, j) * std::cos(std::numbers::pi * static_cast<Real>((2 * i + 1) * u) / (2.0 * h)) *
                 std::cos(std::numbers::pi * static_cast<Real>((2 * j + 1) * v) / (2.0 * w));
        }
      }
      out(u, v) = scale(u, h) * scale(v, w) * sum;
    }
  }
  return out;
}

/// Number of index pairs (i, j) in an H x W grid with 1 <= i+j <= k, by enumeration.
inline std::size_t band_pairs(std::size_t h, std::size_t w, std::size_t k) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) n += (i + j >= 1 && i + j <= k);
  }
  return n;
}

inline Matrix random_matrix(cexample::Rng& rng, Eigen::Index h, Eigen::Index w) {
  Matrix m(h, w);
  for (Eigen::Index i = 0; i < h; ++i) {
    for (Eigen::Index j = 0; j < w; ++j) m(i, j) = cexample::uniform_symmetric(rng, 1.0);
  }
  return m;
}

}  // namespace oracle
