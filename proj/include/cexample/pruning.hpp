#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "cexample/dataset.hpp"
#include "cexample/mask.hpp"
#include "cexample/network.hpp"
#include "cexample/parallel.hpp"
#include "cexample/train.hpp"

namespace cexample {

enum class PruneScope { kPerLayer, kGlobal };

inline std::string_view to_string(PruneScope s) { return s == PruneScope::kPerLayer ? "per-layer" : "global"; }

inline PruneScope prune_scope_from_string(std::string_view s) {
  if (s == "per-layer") return PruneScope::kPerLayer;
  if (s == "global") return PruneScope::kGlobal;
  throw Error(ErrorKind::kParameter, "unknown prune scope '" + std::string(s) + "'");
}

struct PruneConfig {
  Real ratio = 0.0;
  PruneScope scope = PruneScope::kPerLayer;
  std::size_t finetune_epochs = 3;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(ratio >= 0.0 && ratio < 1.0)) {
      throw Error(ErrorKind::kParameter, "pruning ratio " + std::to_string(ratio) + " outside [0, 1)");
    }
  }
};

struct PruneResult {
  Network network;
  SparsityMask mask;
};

namespace detail {

/// Zeroes the `count` smallest-magnitude entries among `entries` (pairs of
/// tensor, index). Ties break by position so the zero-sets nest across ratios.
struct WeightRef {
  std::size_t tensor;
  std::size_t index;
};

inline void prune_smallest(Network& net, SparsityMask& mask, std::vector<WeightRef> refs, std::size_t count) {
  auto mag = [&](const WeightRef& r) { return std::abs(net.parameters()[r.tensor][r.index]); };
  std::stable_sort(refs.begin(), refs.end(), [&](const WeightRef& a, const WeightRef& b) { return mag(a) < mag(b); });
  for (std::size_t i = 0; i < count && i < refs.size(); ++i) {
    net.parameters()[refs[i].tensor][refs[i].index] = 0.0;
    mask.keep[refs[i].tensor][refs[i].index] = 0;
  }
}

inline std::size_t prune_count(Real ratio, std::size_t n) {
  return static_cast<std::size_t>(std::llround(ratio * static_cast<Real>(n)));
}

}  // namespace detail

/// Unstructured magnitude pruning of conv/dense weights (biases exempt).
inline PruneResult magnitude_prune(const Network& net, const PruneConfig& cfg) {
  cfg.validate();
  PruneResult out{net, SparsityMask::all_kept(net)};
  const auto& info = net.parameter_info();
  std::vector<detail::WeightRef> global;
  for (std::size_t p = 0; p < info.size(); ++p) {
    if (info[p].bias) continue;
    std::vector<detail::WeightRef> refs;
    for (std::size_t j = 0; j < net.parameters()[p].size(); ++j) refs.push_back({p, j});
    if (cfg.scope == PruneScope::kPerLayer) {
      const std::size_t n = refs.size();
      detail::prune_smallest(out.network, out.mask, std::move(refs), detail::prune_count(cfg.ratio, n));
    } else {
      global.insert(global.end(), refs.begin(), refs.end());
    }
  }
  if (cfg.scope == PruneScope::kGlobal) {
    const std::size_t n = global.size();
    detail::prune_smallest(out.network, out.mask, std::move(global), detail::prune_count(cfg.ratio, n));
  }
  return out;
}

/// Fraction of prunable (non-bias) weights that are exactly zero.
inline Real sparsity(const Network& net) {
  std::size_t zeros = 0, total = 0;
  for (std::size_t p = 0; p < net.parameters().size(); ++p) {
    if (net.parameter_info()[p].bias) continue;
    for (Real v : net.parameters()[p]) zeros += v == 0.0;
    total += net.parameters()[p].size();
  }
  return total ? static_cast<Real>(zeros) / static_cast<Real>(total) : 0.0;
}

/// Retrains surviving weights; masked weights stay exactly zero.
inline Network finetune_pruned(Network net, const SparsityMask& mask, const Dataset& data, const TrainConfig& cfg,
                               std::size_t epochs) {
  if (!mask.matches(net)) throw Error(ErrorKind::kShape, "sparsity mask does not match network");
  mask.apply(net.parameters());
  if (epochs == 0) return net;
  TrainConfig c = cfg;
  c.epochs = epochs;
  train_in_place(net, data, c, &mask);
  return net;
}

struct PrunedModel {
  Real ratio = 0.0;
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  Network network;
  SparsityMask mask;
  Real test_accuracy = 0.0;
};

struct PruneSuiteConfig {
  std::vector<Real> ratios;
  std::size_t repeats = 5;
  PruneScope scope = PruneScope::kPerLayer;
  std::size_t finetune_epochs = 3;
  TrainConfig finetune;  // learning rate is used as-is; seed is replaced per cell
  std::uint64_t seed = 0;
};

/// repeats x ratios pruned models. The magnitude step is deterministic; each
/// repeat fine-tunes with its own data-order seed.
inline std::vector<PrunedModel> make_pruned_suite(const Network& base, const Dataset& train_data,
                                                  const Dataset& test_data, const PruneSuiteConfig& cfg,
                                                  std::size_t jobs = 1) {
  if (cfg.repeats < 1) throw Error(ErrorKind::kParameter, "pruned suite needs repeats >= 1");
  if (cfg.ratios.empty()) throw Error(ErrorKind::kParameter, "pruned suite needs at least one ratio");
  std::vector<PruneResult> pruned;
  for (Real r : cfg.ratios) pruned.push_back(magnitude_prune(base, {r, cfg.scope, cfg.finetune_epochs, cfg.seed}));
  std::vector<PrunedModel> suite(cfg.ratios.size() * cfg.repeats);
  parallel_for(suite.size(), jobs, [&](std::size_t cell) {
    const std::size_t ri = cell / cfg.repeats, rep = cell % cfg.repeats;
    TrainConfig tc = cfg.finetune;
    tc.seed = derive_seed(cfg.seed, "prune.finetune", cell);
    PrunedModel m;
    m.ratio = cfg.ratios[ri];
    m.repeat = rep;
    m.seed = tc.seed;
    m.network = finetune_pruned(pruned[ri].network, pruned[ri].mask, train_data, tc, cfg.finetune_epochs);
    m.mask = pruned[ri].mask;
    m.test_accuracy = accuracy(m.network, test_data);
    suite[cell] = std::move(m);
  });
  return suite;
}

}  // namespace cexample
