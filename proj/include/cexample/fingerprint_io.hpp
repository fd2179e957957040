#pragma once

#include <cstring>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "cexample/container.hpp"
#include "cexample/fingerprint.hpp"

namespace cexample {

inline constexpr std::string_view kFingerprintMagic = "CEXSET";
inline constexpr std::uint32_t kFingerprintVersion = 1;

/// Header JSON: config, base_hash, base_architecture, image_shape, optional
/// timestamp, provenance, and examples[{label, converged, final_loss,
/// steps_used, seed}]. Payload: every example image as float64, in order.
inline std::string encode_fingerprint_set(const FingerprintSet& set) {
  Container c;
  auto& h = c.header;
  h["config"] = to_json(set.config);
  h["base_hash"] = set.base_hash;
  h["base_architecture"] = set.base_architecture;
  if (set.timestamp) h["timestamp"] = *set.timestamp;
  h["provenance"] = set.provenance;
  Shape shape = set.examples.empty() ? Shape{} : set.examples.front().image.shape();
  h["image_shape"] = shape;
  nlohmann::json examples = nlohmann::json::array();
  for (const auto& e : set.examples) {
    if (e.image.shape() != shape) throw Error(ErrorKind::kShape, "fingerprint images differ in shape");
    examples.push_back({{"label", e.label},
                        {"converged", e.converged},
                        {"final_loss", e.final_loss},
                        {"steps_used", e.steps_used},
                        {"seed", e.seed}});
    c.payload.append(reinterpret_cast<const char*>(e.image.data()), e.image.size() * sizeof(Real));
  }
  h["examples"] = examples;
  return encode_container(kFingerprintMagic, kFingerprintVersion, c);
}

inline FingerprintSet decode_fingerprint_set(std::string_view bytes, const std::string& what = "fingerprint set") {
  Container c = decode_container(bytes, kFingerprintMagic, kFingerprintVersion, what);
  FingerprintSet set;
  try {
    const auto& h = c.header;
    set.config = fingerprint_config_from_json(h.at("config"));
    set.base_hash = h.at("base_hash").get<std::string>();
    set.base_architecture = h.value("base_architecture", std::string{});
    if (h.contains("timestamp")) set.timestamp = h.at("timestamp").get<std::string>();
    set.provenance = h.value("provenance", nlohmann::json::object());
    const Shape shape = h.at("image_shape").get<Shape>();
    const auto& examples = h.at("examples");
    const std::size_t n = shape_size(shape);
    if (c.payload.size() != examples.size() * n * sizeof(Real)) {
      throw Error(ErrorKind::kCorruptFile, what + ": payload size mismatch");
    }
    std::size_t pos = 0;
    for (const auto& e : examples) {
      CExample ex;
      ex.label = e.at("label").get<std::size_t>();
      ex.converged = e.at("converged").get<bool>();
      ex.final_loss = e.at("final_loss").get<Real>();
      ex.steps_used = e.at("steps_used").get<std::size_t>();
      ex.seed = e.at("seed").get<std::uint64_t>();
      ex.image = Tensor(shape);
      std::memcpy(ex.image.data(), c.payload.data() + pos, n * sizeof(Real));
      pos += n * sizeof(Real);
      set.examples.push_back(std::move(ex));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kCorruptFile, what + ": malformed header (" + e.what() + ")");
  }
  return set;
}

inline void save_set(const std::filesystem::path& path, const FingerprintSet& set) {
  write_file(path, encode_fingerprint_set(set));
}

inline FingerprintSet load_set(const std::filesystem::path& path) {
  return decode_fingerprint_set(read_file(path), path.string());
}

}  // namespace cexample
