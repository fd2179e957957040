#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "cexample/dataset.hpp"
#include "cexample/mask.hpp"
#include "cexample/network.hpp"
#include "cexample/parallel.hpp"

namespace cexample {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  Real learning_rate = 0.01;
  Real momentum = 0.9;
  Real weight_decay = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw Error(ErrorKind::kParameter, "epochs must be >= 1");
    if (batch_size < 1) throw Error(ErrorKind::kParameter, "batch size must be >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      throw Error(ErrorKind::kParameter, "learning rate must be finite and non-negative");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(ErrorKind::kParameter, "momentum must be in [0, 1)");
    if (!(weight_decay >= 0.0)) throw Error(ErrorKind::kParameter, "weight decay must be >= 0");
  }
};

struct EpochStats {
  std::size_t epoch = 0;
  Real mean_loss = 0.0;
  Real train_accuracy = 0.0;
};

using TrainHistory = std::vector<EpochStats>;

/// 100 * (# argmax(forward) == label) / N.
inline Real accuracy(const Network& net, const Dataset& data) {
  if (data.empty()) throw Error(ErrorKind::kEmptyInput, "accuracy of an empty dataset");
  if (data.shape != net.input_shape()) {
    throw Error(ErrorKind::kInputShape, "dataset images are " + to_string(data.shape) + ", network expects " +
                                            to_string(net.input_shape()));
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) correct += predict(net, data.image(i)) == data.label(i);
  return 100.0 * static_cast<Real>(correct) / static_cast<Real>(data.size());
}

/// Minibatch SGD with momentum on the mean cross-entropy. When `mask` is
/// given, masked parameters stay exactly zero after every update.
inline TrainHistory train_in_place(Network& net, const Dataset& data, const TrainConfig& cfg,
                                   const SparsityMask* mask = nullptr) {
  cfg.validate();
  if (data.empty()) throw Error(ErrorKind::kEmptyInput, "training on an empty dataset");
  if (data.shape != net.input_shape()) {
    throw Error(ErrorKind::kInputShape, "dataset images are " + to_string(data.shape) + ", network expects " +
                                            to_string(net.input_shape()));
  }
  if (mask && !mask->matches(net)) throw Error(ErrorKind::kShape, "sparsity mask does not match network");

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  ParameterSet velocity = zeros_like(net.parameters());
  ParameterSet grads = zeros_like(net.parameters());
  TrainHistory history;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    Real loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
      const Real scale = 1.0 / static_cast<Real>(end - start);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        detail::Trace trace;
        std::vector<Real> g;
        const Real loss = detail::loss_and_logit_grad(net, data.image(i), data.label(i), trace, g, true);
        correct += argmax(trace.act.back()) == data.label(i);
        detail::backward(net, trace, std::move(g), &grads, scale, nullptr);
        loss_sum += loss;
      }
      if (cfg.learning_rate == 0.0) continue;
      for (std::size_t p = 0; p < grads.size(); ++p) {
        auto w = net.parameters()[p].values();
        auto v = velocity[p].values();
        auto g = grads[p].values();
        const bool decay = cfg.weight_decay > 0.0 && !net.parameter_info()[p].bias;
        for (std::size_t j = 0; j < w.size(); ++j) {
          const Real step = g[j] + (decay ? cfg.weight_decay * w[j] : 0.0);
          v[j] = cfg.momentum * v[j] + step;
          w[j] -= cfg.learning_rate * v[j];
        }
      }
      if (mask) {
        mask->apply(net.parameters());
        mask->apply(velocity);
      }
    }
    const Real mean_loss = loss_sum / static_cast<Real>(data.size());
    const bool finite = std::all_of(net.parameters().begin(), net.parameters().end(),
                                    [](const Tensor& t) { return t.all_finite(); });
    if (!std::isfinite(mean_loss) || !finite) {
      throw Error(ErrorKind::kTrainingDiverged, "loss became non-finite in epoch " + std::to_string(epoch));
    }
    history.push_back({epoch, mean_loss, 100.0 * static_cast<Real>(correct) / static_cast<Real>(data.size())});
  }
  return history;
}

struct TrainResult {
  Network network;
  TrainHistory history;
};

inline TrainResult train(Network net, const Dataset& data, const TrainConfig& cfg) {
  auto history = train_in_place(net, data, cfg);
  return {std::move(net), std::move(history)};
}

/// One network per seed: seed drives both the initialization and the data order.
inline std::vector<Network> train_variants(std::string_view arch, const Dataset& data, const TrainConfig& cfg,
                                           std::span<const std::uint64_t> seeds, std::size_t jobs = 1) {
  if (seeds.empty()) throw Error(ErrorKind::kEmptyInput, "train_variants needs at least one seed");
  std::vector<Network> out(seeds.size());
  parallel_for(seeds.size(), jobs, [&](std::size_t i) {
    TrainConfig c = cfg;
    c.seed = derive_seed(seeds[i], "train.order");
    Network net = make_network(arch, data.shape, data.num_classes, derive_seed(seeds[i], "train.init"));
    train_in_place(net, data, c);
    net.set_seed(seeds[i]);
    out[i] = std::move(net);
  });
  return out;
}

}  // namespace cexample
