#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cexample/network.hpp"

namespace gradcheck {

using cexample::Real;

/// |a - n| / max(|a|, |n|), with both sides below `floor` treated as agreeing.
inline Real relative_error(Real analytic, Real numeric, Real floor = 1e-7) {
  const Real scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale < floor) return 0.0;
  return std::abs(analytic - numeric) / scale;
}

/// Central difference of the loss along one input pixel.
inline Real input_fd(const cexample::Network& net, std::vector<Real> x, std::size_t label, std::size_t i, Real h) {
  const Real v = x[i];
  x[i] = v + h;
  const Real up = cexample::cross_entropy_loss(net, x, label);
  x[i] = v - h;
  const Real down = cexample::cross_entropy_loss(net, x, label);
  return (up - down) / (2.0 * h);
}

/// Central difference of the mean batch loss along one parameter entry.
inline Real param_fd(cexample::Network net, std::span<const cexample::LabeledInput> batch, std::size_t tensor,
                     std::size_t index, Real h) {
  auto mean_loss = [&] {
    Real s = 0.0;
    for (const auto& b : batch) s += cexample::cross_entropy_loss(net, b.image, b.label);
    return s / static_cast<Real>(batch.size());
  };
  Real& w = net.parameters()[tensor][index];
  const Real v = w;
  w = v + h;
  const Real up = mean_loss();
  w = v - h;
  const Real down = mean_loss();
  return (up - down) / (2.0 * h);
}

/// conv3x3(3->4, pad 1) -> relu -> maxpool2 -> dense(64->10) -> softmax on
/// 3x8x8 inputs; 762 parameters, exercises every layer kind.
inline cexample::Network probe_net(std::uint64_t seed) {
  using cexample::LayerSpec;
  cexample::Network net("probe", {3, 8, 8},
                        {LayerSpec::conv2d(3, 4, 3, 1, 1), LayerSpec::relu(), LayerSpec::maxpool2d(2, 2),
                         LayerSpec::dense(64, 10), LayerSpec::softmax()});
  cexample::he_initialize(net, seed);
  cexample::Rng rng(seed + 1);
  for (std::size_t p = 0; p < net.parameters().size(); ++p) {
    if (net.parameter_info()[p].bias) {
      for (auto& b : net.parameters()[p]) b = cexample::uniform_symmetric(rng, 0.1);
    }
  }
  return net;
}

inline std::vector<Real> random_image(cexample::Rng& rng, std::size_t n) {
  std::vector<Real> x(n);
  for (auto& v : x) v = cexample::uniform01(rng);
  return x;
}

}  // namespace gradcheck
