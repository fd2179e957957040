#pragma once

#include <cstdint>
#include <vector>

#include "cexample/network.hpp"

namespace cexample {

/// Per-parameter keep flags (1 = kept, 0 = pruned), shape-matched to a
/// network's parameters. Bias tensors are always all-kept.
struct SparsityMask {
  std::vector<std::vector<std::uint8_t>> keep;

  static SparsityMask all_kept(const Network& net) {
    SparsityMask m;
    for (const auto& t : net.parameters()) m.keep.emplace_back(t.size(), 1);
    return m;
  }

  bool matches(const Network& net) const {
    if (keep.size() != net.parameters().size()) return false;
    for (std::size_t i = 0; i < keep.size(); ++i) {
      if (keep[i].size() != net.parameters()[i].size()) return false;
    }
    return true;
  }

  std::size_t pruned_count() const {
    std::size_t n = 0;
    for (const auto& k : keep) {
      for (auto v : k) n += v == 0;
    }
    return n;
  }

  /// Zeroes every masked parameter in place.
  void apply(ParameterSet& params) const {
    for (std::size_t i = 0; i < keep.size(); ++i) {
      auto values = params[i].values();
      for (std::size_t j = 0; j < values.size(); ++j) {
        if (!keep[i][j]) values[j] = 0.0;
      }
    }
  }

  bool operator==(const SparsityMask&) const = default;
};

}  // namespace cexample
