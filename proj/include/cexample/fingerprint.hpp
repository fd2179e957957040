#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cexample/checkpoint.hpp"
#include "cexample/frequency.hpp"
#include "cexample/network.hpp"
#include "cexample/parallel.hpp"
#include "cexample/random.hpp"

namespace cexample {

/// vanilla: PGD on the base loss. rc: one fresh weight perturbation per step.
/// rc-gm: mean input gradient over q perturbations. ltrc: rc-gm plus a DCT
/// high-pass projection after every clipped step.
enum class Method { kVanilla, kRc, kRcGm, kLtrc };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::kVanilla: return "vanilla";
    case Method::kRc: return "rc";
    case Method::kRcGm: return "rc-gm";
    case Method::kLtrc: return "ltrc";
  }
  return "?";
}

inline Method method_from_string(std::string_view s) {
  for (auto m : {Method::kVanilla, Method::kRc, Method::kRcGm, Method::kLtrc}) {
    if (to_string(m) == s) return m;
  }
  throw Error(ErrorKind::kParameter, "unknown method '" + std::string(s) + "' (vanilla, rc, rc-gm, ltrc)");
}

struct FingerprintConfig {
  Method method = Method::kVanilla;
  Real delta = 0.0;
  std::size_t q = 10;
  std::size_t band_k = 0;
  bool zero_dc = false;
  Real alpha = 1.0 / 255.0;
  std::size_t steps = 500;
  Real eta = 1e-6;
  std::size_t examples = 100;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw Error(ErrorKind::kParameter, "delta must be >= 0");
    if (q < 1) throw Error(ErrorKind::kParameter, "q must be >= 1");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error(ErrorKind::kParameter, "alpha must be >= 0");
    if (steps < 1) throw Error(ErrorKind::kParameter, "step count must be >= 1");
    if (!(eta > 0.0)) throw Error(ErrorKind::kParameter, "eta must be > 0");
    if (examples < 1) throw Error(ErrorKind::kParameter, "example count must be >= 1");
  }

  /// Perturbation bound actually used (vanilla ignores delta).
  Real effective_delta() const { return method == Method::kVanilla ? 0.0 : delta; }
  /// Gradient samples per step (rc always draws one).
  std::size_t effective_q() const { return (method == Method::kRcGm || method == Method::kLtrc) ? q : 1; }
  /// Band size actually used (only ltrc filters).
  std::size_t effective_band() const { return method == Method::kLtrc ? band_k : 0; }

  /// Canonical label such as "ltrc-d0.03-k2".
  std::string cell_name() const {
    char buf[64];
    std::string name(to_string(method));
    if (method != Method::kVanilla) {
      std::snprintf(buf, sizeof buf, "-d%g", delta);
      name += buf;
    }
    if (method == Method::kLtrc) name += "-k" + std::to_string(band_k);
    return name;
  }
};

inline nlohmann::json to_json(const FingerprintConfig& c) {
  return {{"method", to_string(c.method)}, {"delta", c.delta},   {"q", c.q},
          {"band_k", c.band_k},            {"zero_dc", c.zero_dc}, {"alpha", c.alpha},
          {"steps", c.steps},              {"eta", c.eta},       {"examples", c.examples},
          {"seed", c.seed}};
}

inline FingerprintConfig fingerprint_config_from_json(const nlohmann::json& j) {
  FingerprintConfig c;
  c.method = method_from_string(j.at("method").get<std::string>());
  c.delta = j.at("delta").get<Real>();
  c.q = j.at("q").get<std::size_t>();
  c.band_k = j.at("band_k").get<std::size_t>();
  c.zero_dc = j.value("zero_dc", false);
  c.alpha = j.at("alpha").get<Real>();
  c.steps = j.at("steps").get<std::size_t>();
  c.eta = j.at("eta").get<Real>();
  c.examples = j.at("examples").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

/// One fingerprint image with its target label and how it was produced.
struct CExample {
  Tensor image;
  std::size_t label = 0;
  bool converged = false;
  Real final_loss = 0.0;
  std::size_t steps_used = 0;
  std::uint64_t seed = 0;
};

struct FingerprintSet {
  std::vector<CExample> examples;
  FingerprintConfig config;
  std::string base_hash;
  std::string base_architecture;
  std::optional<std::string> timestamp;
  nlohmann::json provenance = nlohmann::json::object();

  std::size_t converged_count() const {
    return static_cast<std::size_t>(std::count_if(examples.begin(), examples.end(), [](const auto& e) { return e.converged; }));
  }
};

/// i.i.d. uniform [0,1] image, deterministic per seed.
inline Tensor random_start(std::uint64_t seed, ImageShape shape) {
  if (shape.size() == 0) throw Error(ErrorKind::kShape, "random_start needs a non-empty shape");
  Rng rng(seed);
  Tensor x(shape.to_shape());
  for (auto& v : x) v = uniform01(rng);
  return x;
}

/// Input gradient the step rule consumes for `cfg.method`. Each weight
/// perturbation is drawn fresh from `rng`; with delta = 0 the plain base-model
/// gradient is returned and `rng` is not consumed.
inline Tensor effective_gradient(const Network& net, const Tensor& x, std::size_t label, const FingerprintConfig& cfg,
                                 Rng& rng) {
  const Real delta = cfg.effective_delta();
  if (delta == 0.0) return input_gradient(net, x, label);
  const std::size_t q = cfg.effective_q();
  Tensor mean(x.shape());
  // Same draws and arithmetic as apply_perturbation(net, sample_perturbation(net, delta, rng)),
  // without materializing the offsets.
  Network perturbed = net;
  for (std::size_t s = 0; s < q; ++s) {
    for (std::size_t p = 0; p < net.parameters().size(); ++p) {
      auto dst = perturbed.parameters()[p].values();
      auto src = net.parameters()[p].values();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = src[j] + uniform_symmetric(rng, delta);
    }
    const Tensor g = input_gradient(perturbed, x, label);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += g[i];
  }
  if (q > 1) {
    for (auto& v : mean) v /= static_cast<Real>(q);
  }
  return mean;
}

inline Real sign(Real v) { return static_cast<Real>((v > 0.0) - (v < 0.0)); }

/// Clip(x - alpha * sign(g)) onto [0, 1].
inline Tensor pgd_step(const Tensor& x, const Tensor& g, Real alpha) {
  if (x.shape() != g.shape()) {
    throw Error(ErrorKind::kShape, "gradient " + shape_string(g.shape()) + " vs image " + shape_string(x.shape()));
  }
  if (!(alpha >= 0.0)) throw Error(ErrorKind::kParameter, "step size must be >= 0");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::clamp(x[i] - alpha * sign(g[i]), 0.0, 1.0);
  return out;
}

/// HighPass(Clip(x - alpha * sign(g))). The filter is outermost, so the
/// result is not re-clipped. An empty band reduces to pgd_step exactly.
inline Tensor ltrc_step(const Tensor& x, const Tensor& g, Real alpha, const HighPassMask& mask) {
  Tensor clipped = pgd_step(x, g, alpha);
  if (mask.zero_count() == 0) return clipped;
  return apply_highpass(clipped, mask);
}

inline Tensor ltrc_step(const Tensor& x, const Tensor& g, Real alpha, std::size_t band, bool zero_dc = false) {
  const ImageShape s = image_shape_of(x);
  return ltrc_step(x, g, alpha, make_highpass_mask(s.height, s.width, band, zero_dc));
}

/// Runs the step rule for one example from its seeded start. Always takes at
/// least one step; stops once the base-model loss falls below eta.
inline CExample generate_one(const Network& net, const FingerprintConfig& cfg, std::size_t label,
                             std::uint64_t seed, const std::optional<HighPassMask>& mask) {
  CExample ex;
  ex.label = label;
  ex.seed = seed;
  Rng rng(derive_seed(seed, "perturbation"));
  Tensor x = random_start(derive_seed(seed, "start"), net.input_shape());
  Real loss = 0.0;
  std::size_t t = 0;
  while (t < cfg.steps) {
    const Tensor g = effective_gradient(net, x, label, cfg, rng);
    x = mask ? ltrc_step(x, g, cfg.alpha, *mask) : pgd_step(x, g, cfg.alpha);
    ++t;
    loss = cross_entropy_loss(net, x, label);
    if (loss < cfg.eta) break;
  }
  ex.image = std::move(x);
  ex.final_loss = loss;
  ex.converged = loss < cfg.eta;
  ex.steps_used = t;
  return ex;
}

/// P fingerprints against `net`. Target labels are drawn uniformly with
/// replacement from the config seed; example p starts from its own derived seed.
inline FingerprintSet generate(const Network& net, const FingerprintConfig& cfg, std::size_t jobs = 1) {
  cfg.validate();
  const ImageShape s = net.input_shape();
  std::optional<HighPassMask> mask;
  if (cfg.method == Method::kLtrc) mask = make_highpass_mask(s.height, s.width, cfg.band_k, cfg.zero_dc);

  Rng label_rng(derive_seed(cfg.seed, "labels"));
  std::vector<std::size_t> labels(cfg.examples);
  for (auto& l : labels) l = uniform_index(label_rng, net.num_classes());

  FingerprintSet set;
  set.config = cfg;
  set.base_hash = network_hash(net);
  set.base_architecture = net.architecture();
  set.examples.resize(cfg.examples);
  parallel_for(cfg.examples, jobs, [&](std::size_t p) {
    set.examples[p] = generate_one(net, cfg, labels[p], derive_seed(cfg.seed, "example", p), mask);
  });
  return set;
}

/// Largest distance of any pixel outside [0, 1].
inline Real range_overshoot(const Tensor& image) {
  Real worst = 0.0;
  for (Real v : image) worst = std::max({worst, v - 1.0, -v});
  return worst;
}

}  // namespace cexample
