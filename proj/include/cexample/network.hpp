#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cexample/error.hpp"
#include "cexample/random.hpp"
#include "cexample/tensor.hpp"

namespace cexample {

enum class LayerKind { kConv2d, kDense, kRelu, kMaxPool2d, kSoftmax };

inline std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kDense: return "dense";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kMaxPool2d: return "maxpool2d";
    case LayerKind::kSoftmax: return "softmax";
  }
  return "?";
}

inline LayerKind layer_kind_from_string(std::string_view name) {
  for (auto kind : {LayerKind::kConv2d, LayerKind::kDense, LayerKind::kRelu, LayerKind::kMaxPool2d,
                    LayerKind::kSoftmax}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorKind::kParameter, "unknown layer kind '" + std::string(name) + "'");
}

/// One layer of a feed-forward classifier. Only the fields relevant to `kind`
/// are meaningful; a dense layer flattens whatever comes in.
struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t in_features = 0;
  std::size_t out_features = 0;

  static LayerSpec conv2d(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride = 1,
                          std::size_t padding = 0) {
    return {LayerKind::kConv2d, in, out, kernel, stride, padding, 0, 0};
  }
  static LayerSpec dense(std::size_t in, std::size_t out) {
    return {LayerKind::kDense, 0, 0, 0, 1, 0, in, out};
  }
  static LayerSpec relu() { return {LayerKind::kRelu}; }
  static LayerSpec maxpool2d(std::size_t kernel, std::size_t stride) {
    return {LayerKind::kMaxPool2d, 0, 0, kernel, stride, 0, 0, 0};
  }
  static LayerSpec softmax() { return {LayerKind::kSoftmax}; }

  bool has_parameters() const { return kind == LayerKind::kConv2d || kind == LayerKind::kDense; }
  bool operator==(const LayerSpec&) const = default;
};

/// Identifies a parameter tensor inside a network.
struct ParamInfo {
  std::size_t layer = 0;
  bool bias = false;
  std::string name;

  bool operator==(const ParamInfo&) const = default;
};

using ParameterSet = std::vector<Tensor>;

/// Layered classifier F_theta: image -> probability vector. Parameters are
/// stored as one weight and one bias tensor per conv/dense layer, in layer
/// order ("canonical order").
class Network {
 public:
  Network() = default;

  Network(std::string architecture, ImageShape input, std::vector<LayerSpec> layers)
      : architecture_(std::move(architecture)), input_(input), layers_(std::move(layers)) {
    validate_and_allocate();
  }

  const std::string& architecture() const noexcept { return architecture_; }
  ImageShape input_shape() const noexcept { return input_; }
  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  std::size_t num_classes() const noexcept { return act_shapes_.empty() ? 0 : act_shapes_.back().size(); }

  /// Shape of the activation entering layer i (index layers().size() is the output).
  const std::vector<ImageShape>& activation_shapes() const noexcept { return act_shapes_; }

  ParameterSet& parameters() noexcept { return params_; }
  const ParameterSet& parameters() const noexcept { return params_; }
  const std::vector<ParamInfo>& parameter_info() const noexcept { return param_info_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : params_) n += t.size();
    return n;
  }

  /// Index into parameters() of the weight of layer `layer`, or npos.
  std::size_t weight_index(std::size_t layer) const { return layer_param_[layer]; }

  std::uint64_t seed() const noexcept { return seed_; }
  void set_seed(std::uint64_t seed) noexcept { seed_ = seed; }

  bool operator==(const Network&) const = default;

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

 private:
  void validate_and_allocate() {
    if (input_.size() == 0) throw Error(ErrorKind::kShape, "network input shape must be non-empty");
    act_shapes_.clear();
    params_.clear();
    param_info_.clear();
    layer_param_.assign(layers_.size(), npos);
    ImageShape cur = input_;
    act_shapes_.push_back(cur);
    std::size_t softmax_count = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      auto& l = layers_[i];
      const std::string where = "layer " + std::to_string(i) + " (" + std::string(to_string(l.kind)) + ")";
      switch (l.kind) {
        case LayerKind::kConv2d: {
          if (l.in_channels != cur.channels || l.kernel == 0 || l.stride == 0 || l.out_channels == 0) {
            throw Error(ErrorKind::kShape, where + " expects " + std::to_string(l.in_channels) +
                                               " channels, got " + to_string(cur));
          }
          if (cur.height + 2 * l.padding < l.kernel || cur.width + 2 * l.padding < l.kernel) {
            throw Error(ErrorKind::kShape, where + " kernel larger than input " + to_string(cur));
          }
          const std::size_t h = (cur.height + 2 * l.padding - l.kernel) / l.stride + 1;
          const std::size_t w = (cur.width + 2 * l.padding - l.kernel) / l.stride + 1;
          add_params(i, {l.out_channels, l.in_channels, l.kernel, l.kernel}, {l.out_channels});
          cur = {l.out_channels, h, w};
          break;
        }
        case LayerKind::kDense: {
          if (l.in_features != cur.size() || l.out_features == 0) {
            throw Error(ErrorKind::kShape, where + " expects " + std::to_string(l.in_features) +
                                               " features, got " + std::to_string(cur.size()));
          }
          add_params(i, {l.out_features, l.in_features}, {l.out_features});
          cur = {l.out_features, 1, 1};
          break;
        }
        case LayerKind::kRelu:
          break;
        case LayerKind::kMaxPool2d: {
          if (l.kernel == 0 || l.stride == 0 || cur.height < l.kernel || cur.width < l.kernel) {
            throw Error(ErrorKind::kShape, where + " window does not fit " + to_string(cur));
          }
          cur = {cur.channels, (cur.height - l.kernel) / l.stride + 1, (cur.width - l.kernel) / l.stride + 1};
          break;
        }
        case LayerKind::kSoftmax:
          ++softmax_count;
          if (i + 1 != layers_.size()) throw Error(ErrorKind::kShape, "softmax must be the terminal layer");
          break;
      }
      act_shapes_.push_back(cur);
    }
    if (softmax_count != 1) throw Error(ErrorKind::kShape, "network needs exactly one terminal softmax");
    if (num_classes() < 2) throw Error(ErrorKind::kShape, "network must output at least two classes");
  }

  void add_params(std::size_t layer, Shape weight, Shape bias) {
    layer_param_[layer] = params_.size();
    params_.emplace_back(std::move(weight));
    param_info_.push_back({layer, false, "layer" + std::to_string(layer) + ".weight"});
    params_.emplace_back(std::move(bias));
    param_info_.push_back({layer, true, "layer" + std::to_string(layer) + ".bias"});
  }

  std::string architecture_;
  ImageShape input_;
  std::vector<LayerSpec> layers_;
  std::vector<ImageShape> act_shapes_;
  ParameterSet params_;
  std::vector<ParamInfo> param_info_;
  std::vector<std::size_t> layer_param_;
  std::uint64_t seed_ = 0;
};

/// He-style fan-in initialization: weights ~ N(0, 2/fan_in), biases 0.
inline void he_initialize(Network& net, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t p = 0; p < net.parameters().size(); ++p) {
    Tensor& t = net.parameters()[p];
    if (net.parameter_info()[p].bias) {
      std::fill(t.begin(), t.end(), 0.0);
      continue;
    }
    const std::size_t fan_in = t.size() / t.shape()[0];
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (auto& v : t) v = dist(rng);
  }
  net.set_seed(seed);
}

/// Layer stack for a named architecture. Known ids:
///   cnn-small  3 x (conv3x3 pad1 + relu + maxpool2) with 8/16/32 channels, dense 64, dense M
///   cnn-wide   same topology with 16/32/64 channels
///   cnn-tiny   conv3x3(4) + relu + maxpool2, dense M (gradient-check sized)
///   mlp        dense 32 + relu + dense M
inline std::vector<LayerSpec> architecture_layers(std::string_view arch, ImageShape input, std::size_t classes) {
  auto conv_stack = [&](std::initializer_list<std::size_t> channels, std::size_t hidden) {
    std::vector<LayerSpec> layers;
    std::size_t c = input.channels, h = input.height, w = input.width;
    for (std::size_t out : channels) {
      layers.push_back(LayerSpec::conv2d(c, out, 3, 1, 1));
      layers.push_back(LayerSpec::relu());
      layers.push_back(LayerSpec::maxpool2d(2, 2));
      c = out;
      h /= 2;
      w /= 2;
    }
    if (hidden) {
      layers.push_back(LayerSpec::dense(c * h * w, hidden));
      layers.push_back(LayerSpec::relu());
      layers.push_back(LayerSpec::dense(hidden, classes));
    } else {
      layers.push_back(LayerSpec::dense(c * h * w, classes));
    }
    layers.push_back(LayerSpec::softmax());
    return layers;
  };
  if (arch == "cnn-small") return conv_stack({8, 16, 32}, 64);
  if (arch == "cnn-wide") return conv_stack({16, 32, 64}, 64);
  if (arch == "cnn-tiny") return conv_stack({4}, 0);
  if (arch == "mlp") {
    return {LayerSpec::dense(input.size(), 32), LayerSpec::relu(), LayerSpec::dense(32, classes),
            LayerSpec::softmax()};
  }
  throw Error(ErrorKind::kParameter, "unknown architecture '" + std::string(arch) + "'");
}

inline Network make_network(std::string_view arch, ImageShape input, std::size_t classes, std::uint64_t seed) {
  Network net(std::string(arch), input, architecture_layers(arch, input, classes));
  he_initialize(net, seed);
  return net;
}

namespace detail {

using RowMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorX<Real>>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorX<Real>>;

/// Activations recorded during a forward pass; act[i] enters layer i.
struct Trace {
  std::vector<std::vector<Real>> act;
  std::vector<std::vector<Real>> cols;
  std::vector<std::vector<std::uint32_t>> argmax;
};

inline void im2col(std::span<const Real> in, ImageShape s, const LayerSpec& l, ImageShape out,
                   std::vector<Real>& cols) {
  const std::size_t k = l.kernel, P = out.plane();
  cols.assign(s.channels * k * k * P, 0.0);
  for (std::size_t c = 0; c < s.channels; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        Real* row = cols.data() + ((c * k + ky) * k + kx) * P;
        for (std::size_t oy = 0; oy < out.height; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * l.stride + ky) - static_cast<std::ptrdiff_t>(l.padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(s.height)) continue;
          const Real* src = in.data() + (c * s.height + static_cast<std::size_t>(iy)) * s.width;
          for (std::size_t ox = 0; ox < out.width; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * l.stride + kx) - static_cast<std::ptrdiff_t>(l.padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(s.width)) continue;
            row[oy * out.width + ox] = src[ix];
          }
        }
      }
    }
  }
}

inline void col2im(const RowMatrix& dcols, ImageShape s, const LayerSpec& l, ImageShape out, std::vector<Real>& din) {
  const std::size_t k = l.kernel, P = out.plane();
  din.assign(s.size(), 0.0);
  for (std::size_t c = 0; c < s.channels; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const Real* row = dcols.data() + ((c * k + ky) * k + kx) * P;
        for (std::size_t oy = 0; oy < out.height; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * l.stride + ky) - static_cast<std::ptrdiff_t>(l.padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(s.height)) continue;
          Real* dst = din.data() + (c * s.height + static_cast<std::size_t>(iy)) * s.width;
          for (std::size_t ox = 0; ox < out.width; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * l.stride + kx) - static_cast<std::ptrdiff_t>(l.padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(s.width)) continue;
            dst[ix] += row[oy * out.width + ox];
          }
        }
      }
    }
  }
}

/// Runs every layer up to, but excluding, the softmax. trace.act.back() holds the logits.
inline void forward_logits(const Network& net, std::span<const Real> x, Trace& trace, bool keep_cols) {
  const auto& layers = net.layers();
  const auto& shapes = net.activation_shapes();
  const std::size_t n = layers.size() - 1;
  trace.act.resize(n + 1);
  trace.cols.resize(n);
  trace.argmax.resize(n);
  trace.act[0].assign(x.begin(), x.end());
  std::vector<Real> scratch;
  for (std::size_t i = 0; i < n; ++i) {
    const LayerSpec& l = layers[i];
    const ImageShape in_s = shapes[i], out_s = shapes[i + 1];
    const std::vector<Real>& in = trace.act[i];
    std::vector<Real>& out = trace.act[i + 1];
    out.resize(out_s.size());
    switch (l.kind) {
      case LayerKind::kConv2d: {
        std::vector<Real>& cols = keep_cols ? trace.cols[i] : scratch;
        im2col(in, in_s, l, out_s, cols);
        const std::size_t wi = net.weight_index(i);
        const Tensor& w = net.parameters()[wi];
        const Tensor& b = net.parameters()[wi + 1];
        const std::size_t ckk = in_s.channels * l.kernel * l.kernel;
        ConstMatrixMap W(w.data(), static_cast<Eigen::Index>(l.out_channels), static_cast<Eigen::Index>(ckk));
        ConstMatrixMap C(cols.data(), static_cast<Eigen::Index>(ckk), static_cast<Eigen::Index>(out_s.plane()));
        MatrixMap O(out.data(), static_cast<Eigen::Index>(l.out_channels), static_cast<Eigen::Index>(out_s.plane()));
        O.noalias() = W * C;
        O.colwise() += ConstVectorMap(b.data(), static_cast<Eigen::Index>(b.size()));
        break;
      }
      case LayerKind::kDense: {
        const std::size_t wi = net.weight_index(i);
        const Tensor& w = net.parameters()[wi];
        const Tensor& b = net.parameters()[wi + 1];
        ConstMatrixMap W(w.data(), static_cast<Eigen::Index>(l.out_features), static_cast<Eigen::Index>(l.in_features));
        VectorMap O(out.data(), static_cast<Eigen::Index>(out.size()));
        O.noalias() = W * ConstVectorMap(in.data(), static_cast<Eigen::Index>(in.size()));
        O += ConstVectorMap(b.data(), static_cast<Eigen::Index>(b.size()));
        break;
      }
      case LayerKind::kRelu:
        for (std::size_t j = 0; j < in.size(); ++j) out[j] = in[j] > 0.0 ? in[j] : 0.0;
        break;
      case LayerKind::kMaxPool2d: {
        auto& idx = trace.argmax[i];
        idx.resize(out_s.size());
        for (std::size_t c = 0; c < out_s.channels; ++c) {
          for (std::size_t oy = 0; oy < out_s.height; ++oy) {
            for (std::size_t ox = 0; ox < out_s.width; ++ox) {
              std::size_t best = (c * in_s.height + oy * l.stride) * in_s.width + ox * l.stride;
              for (std::size_t ky = 0; ky < l.kernel; ++ky) {
                for (std::size_t kx = 0; kx < l.kernel; ++kx) {
                  const std::size_t j = (c * in_s.height + oy * l.stride + ky) * in_s.width + ox * l.stride + kx;
                  if (in[j] > in[best]) best = j;
                }
              }
              const std::size_t o = (c * out_s.height + oy) * out_s.width + ox;
              out[o] = in[best];
              idx[o] = static_cast<std::uint32_t>(best);
            }
          }
        }
        break;
      }
      case LayerKind::kSoftmax:
        break;
    }
  }
}

inline std::vector<Real> softmax(std::span<const Real> logits) {
  const Real m = *std::max_element(logits.begin(), logits.end());
  std::vector<Real> p(logits.size());
  Real sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += (p[i] = std::exp(logits[i] - m));
  for (auto& v : p) v /= sum;
  return p;
}

/// -log softmax(z)_label via log-sum-exp; never negative. Non-finite logits
/// propagate as NaN so callers can detect divergence.
inline Real cross_entropy_from_logits(std::span<const Real> logits, std::size_t label) {
  const Real m = *std::max_element(logits.begin(), logits.end());
  Real sum = 0.0;
  for (Real z : logits) sum += std::exp(z - m);
  const Real loss = m + std::log(sum) - logits[label];
  return std::isnan(loss) ? loss : std::max(Real{0}, loss);
}

/// Backpropagates d(loss)/d(logits) through the trace. Parameter gradients are
/// accumulated (scaled) into `param_grads` when non-null; the input gradient is
/// written to `input_grad` when non-null.
inline void backward(const Network& net, const Trace& trace, std::vector<Real> grad, ParameterSet* param_grads,
                     Real scale, std::vector<Real>* input_grad) {
  const auto& layers = net.layers();
  const auto& shapes = net.activation_shapes();
  const std::size_t n = layers.size() - 1;
  std::vector<Real> din;
  RowMatrix dcols;
  for (std::size_t i = n; i-- > 0;) {
    const LayerSpec& l = layers[i];
    const ImageShape in_s = shapes[i], out_s = shapes[i + 1];
    const bool need_input = i > 0 || input_grad != nullptr;
    switch (l.kind) {
      case LayerKind::kConv2d: {
        const std::size_t wi = net.weight_index(i);
        const Tensor& w = net.parameters()[wi];
        const std::size_t ckk = in_s.channels * l.kernel * l.kernel;
        const auto P = static_cast<Eigen::Index>(out_s.plane());
        const auto Co = static_cast<Eigen::Index>(l.out_channels);
        ConstMatrixMap G(grad.data(), Co, P);
        if (param_grads) {
          const auto& cols = trace.cols[i];
          ConstMatrixMap C(cols.data(), static_cast<Eigen::Index>(ckk), P);
          MatrixMap dW((*param_grads)[wi].data(), Co, static_cast<Eigen::Index>(ckk));
          dW.noalias() += scale * (G * C.transpose());
          VectorMap(((*param_grads)[wi + 1]).data(), Co) += scale * G.rowwise().sum();
        }
        if (need_input) {
          ConstMatrixMap W(w.data(), Co, static_cast<Eigen::Index>(ckk));
          dcols.noalias() = W.transpose() * G;
          col2im(dcols, in_s, l, out_s, din);
          grad.swap(din);
        }
        break;
      }
      case LayerKind::kDense: {
        const std::size_t wi = net.weight_index(i);
        const Tensor& w = net.parameters()[wi];
        const auto out = static_cast<Eigen::Index>(l.out_features), in = static_cast<Eigen::Index>(l.in_features);
        ConstVectorMap G(grad.data(), out);
        if (param_grads) {
          const auto& x = trace.act[i];
          MatrixMap dW((*param_grads)[wi].data(), out, in);
          dW.noalias() += scale * (G * ConstVectorMap(x.data(), in).transpose());
          VectorMap(((*param_grads)[wi + 1]).data(), out) += scale * G;
        }
        if (need_input) {
          din.resize(l.in_features);
          VectorMap(din.data(), in).noalias() = ConstMatrixMap(w.data(), out, in).transpose() * G;
          grad.swap(din);
        }
        break;
      }
      case LayerKind::kRelu: {
        const auto& out = trace.act[i + 1];
        for (std::size_t j = 0; j < grad.size(); ++j) {
          if (out[j] <= 0.0) grad[j] = 0.0;
        }
        break;
      }
      case LayerKind::kMaxPool2d: {
        din.assign(in_s.size(), 0.0);
        const auto& idx = trace.argmax[i];
        for (std::size_t j = 0; j < grad.size(); ++j) din[idx[j]] += grad[j];
        grad.swap(din);
        break;
      }
      case LayerKind::kSoftmax:
        break;
    }
  }
  if (input_grad) *input_grad = std::move(grad);
}

inline void check_input(const Network& net, std::size_t size) {
  if (size != net.input_shape().size()) {
    throw Error(ErrorKind::kInputShape, "network expects " + to_string(net.input_shape()) + " (" +
                                            std::to_string(net.input_shape().size()) + " values), got " +
                                            std::to_string(size));
  }
}

inline void check_label(const Network& net, std::size_t label) {
  if (label >= net.num_classes()) {
    throw Error(ErrorKind::kLabel, "label " + std::to_string(label) + " outside [0, " +
                                       std::to_string(net.num_classes()) + ")");
  }
}

/// Loss, gradient w.r.t. logits, and the trace, for one example.
inline Real loss_and_logit_grad(const Network& net, std::span<const Real> x, std::size_t label, Trace& trace,
                                std::vector<Real>& logit_grad, bool keep_cols) {
  forward_logits(net, x, trace, keep_cols);
  const auto& z = trace.act.back();
  logit_grad = softmax(z);
  const Real loss = cross_entropy_from_logits(z, label);
  logit_grad[label] -= 1.0;
  return loss;
}

}  // namespace detail

/// Class logits (pre-softmax activations).
inline std::vector<Real> logits(const Network& net, std::span<const Real> x) {
  detail::check_input(net, x.size());
  detail::Trace trace;
  detail::forward_logits(net, x, trace, false);
  return std::move(trace.act.back());
}

/// Probability vector y = F_theta(x).
inline std::vector<Real> forward(const Network& net, std::span<const Real> x) {
  const auto z = logits(net, x);
  return detail::softmax(z);
}

inline std::vector<Real> forward(const Network& net, const Tensor& x) {
  if (x.size() != net.input_shape().size() || (x.shape().size() == 3 && x.shape() != net.input_shape().to_shape())) {
    throw Error(ErrorKind::kInputShape, "network expects " + to_string(net.input_shape()) + ", got " +
                                            shape_string(x.shape()));
  }
  return forward(net, x.values());
}

/// Index of the largest probability; ties go to the lowest index.
inline std::size_t argmax(std::span<const Real> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline std::size_t predict(const Network& net, std::span<const Real> x) { return argmax(logits(net, x)); }

inline Real cross_entropy_loss(const Network& net, std::span<const Real> x, std::size_t label) {
  detail::check_input(net, x.size());
  detail::check_label(net, label);
  detail::Trace trace;
  detail::forward_logits(net, x, trace, false);
  return detail::cross_entropy_from_logits(trace.act.back(), label);
}

inline Real cross_entropy_loss(const Network& net, const Tensor& x, std::size_t label) {
  return cross_entropy_loss(net, x.values(), label);
}

/// Exact gradient of the cross-entropy loss with respect to the input image.
inline Tensor input_gradient(const Network& net, std::span<const Real> x, std::size_t label) {
  detail::check_input(net, x.size());
  detail::check_label(net, label);
  detail::Trace trace;
  std::vector<Real> g;
  detail::loss_and_logit_grad(net, x, label, trace, g, false);
  std::vector<Real> dx;
  detail::backward(net, trace, std::move(g), nullptr, 0.0, &dx);
  return Tensor(net.input_shape().to_shape(), std::move(dx));
}

inline Tensor input_gradient(const Network& net, const Tensor& x, std::size_t label) {
  return input_gradient(net, x.values(), label);
}

inline ParameterSet zeros_like(const ParameterSet& params) {
  ParameterSet out;
  out.reserve(params.size());
  for (const auto& t : params) out.emplace_back(t.shape());
  return out;
}

/// A labelled input for batch operations.
struct LabeledInput {
  std::span<const Real> image;
  std::size_t label = 0;
};

/// Accumulates scale * d(loss)/d(theta) for one example into `grads` and returns its loss.
inline Real accumulate_param_gradient(const Network& net, std::span<const Real> x, std::size_t label,
                                      ParameterSet& grads, Real scale) {
  detail::Trace trace;
  std::vector<Real> g;
  const Real loss = detail::loss_and_logit_grad(net, x, label, trace, g, true);
  detail::backward(net, trace, std::move(g), &grads, scale, nullptr);
  return loss;
}

/// Gradient of the mean batch loss with respect to every parameter.
inline ParameterSet param_gradient(const Network& net, std::span<const LabeledInput> batch) {
  if (batch.empty()) throw Error(ErrorKind::kEmptyInput, "param_gradient needs a non-empty batch");
  for (const auto& item : batch) {
    detail::check_input(net, item.image.size());
    detail::check_label(net, item.label);
  }
  ParameterSet grads = zeros_like(net.parameters());
  const Real scale = 1.0 / static_cast<Real>(batch.size());
  for (const auto& item : batch) accumulate_param_gradient(net, item.image, item.label, grads, scale);
  return grads;
}

/// Per-parameter offsets Delta with every entry in [-bound, bound].
struct WeightPerturbation {
  Real bound = 0.0;
  ParameterSet offsets;
};

/// Draws Delta i.i.d. uniform on [-delta, delta] for every parameter (weights and biases).
inline WeightPerturbation sample_perturbation(const Network& net, Real delta, Rng& rng) {
  if (!(delta >= 0.0)) throw Error(ErrorKind::kParameter, "perturbation bound must be >= 0");
  WeightPerturbation p{delta, zeros_like(net.parameters())};
  if (delta == 0.0) return p;
  for (auto& t : p.offsets) {
    for (auto& v : t) v = uniform_symmetric(rng, delta);
  }
  return p;
}

/// Network with parameters theta + Delta. `net` is untouched.
inline Network apply_perturbation(const Network& net, const WeightPerturbation& p) {
  const auto& params = net.parameters();
  if (p.offsets.size() != params.size()) {
    throw Error(ErrorKind::kShape, "perturbation has " + std::to_string(p.offsets.size()) + " tensors, network has " +
                                       std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (p.offsets[i].shape() != params[i].shape()) {
      throw Error(ErrorKind::kShape, "perturbation tensor " + std::to_string(i) + " has shape " +
                                         shape_string(p.offsets[i].shape()) + ", expected " +
                                         shape_string(params[i].shape()));
    }
  }
  Network out = net;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = out.parameters()[i].values();
    auto src = p.offsets[i].values();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
  return out;
}

inline WeightPerturbation negate(WeightPerturbation p) {
  for (auto& t : p.offsets) {
    for (auto& v : t) v = -v;
  }
  return p;
}

}  // namespace cexample
