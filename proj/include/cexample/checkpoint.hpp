#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "cexample/container.hpp"
#include "cexample/hash.hpp"
#include "cexample/mask.hpp"
#include "cexample/network.hpp"

namespace cexample {

inline constexpr std::string_view kCheckpointMagic = "CEXCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline nlohmann::json layer_to_json(const LayerSpec& l) {
  nlohmann::json j{{"kind", to_string(l.kind)}};
  switch (l.kind) {
    case LayerKind::kConv2d:
      j.update({{"in_channels", l.in_channels}, {"out_channels", l.out_channels}, {"kernel", l.kernel},
                {"stride", l.stride}, {"padding", l.padding}});
      break;
    case LayerKind::kDense:
      j.update({{"in_features", l.in_features}, {"out_features", l.out_features}});
      break;
    case LayerKind::kMaxPool2d:
      j.update({{"kernel", l.kernel}, {"stride", l.stride}});
      break;
    default:
      break;
  }
  return j;
}

inline LayerSpec layer_from_json(const nlohmann::json& j) {
  LayerSpec l;
  l.kind = layer_kind_from_string(j.at("kind").get<std::string>());
  l.in_channels = j.value("in_channels", std::size_t{0});
  l.out_channels = j.value("out_channels", std::size_t{0});
  l.kernel = j.value("kernel", std::size_t{0});
  l.stride = j.value("stride", std::size_t{1});
  l.padding = j.value("padding", std::size_t{0});
  l.in_features = j.value("in_features", std::size_t{0});
  l.out_features = j.value("out_features", std::size_t{0});
  return l;
}

inline nlohmann::json network_descriptor(const Network& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers()) layers.push_back(layer_to_json(l));
  const auto s = net.input_shape();
  return {{"architecture", net.architecture()},
          {"input_shape", {s.channels, s.height, s.width}},
          {"classes", net.num_classes()},
          {"layers", layers}};
}

/// Identity of a network's function: architecture, layers and raw parameter
/// bits. Independent of seed and provenance.
inline std::string network_hash(const Network& net) {
  Sha256 h;
  h.update(network_descriptor(net).dump());
  for (const auto& t : net.parameters()) h.update(t.data(), t.size() * sizeof(Real));
  return h.hex();
}

struct Checkpoint {
  Network network;
  std::optional<SparsityMask> mask;
  nlohmann::json provenance = nlohmann::json::object();
};

/// Header JSON fields: architecture, input_shape, classes, layers, seed,
/// parameters[{name, shape}], has_mask, provenance. Payload: every parameter
/// tensor as float64 in canonical order, then (if has_mask) one byte per
/// parameter element.
inline std::string encode_checkpoint(const Checkpoint& ck) {
  const Network& net = ck.network;
  Container c;
  c.header = network_descriptor(net);
  c.header["seed"] = net.seed();
  nlohmann::json params = nlohmann::json::array();
  for (std::size_t i = 0; i < net.parameters().size(); ++i) {
    params.push_back({{"name", net.parameter_info()[i].name}, {"shape", net.parameters()[i].shape()}});
  }
  c.header["parameters"] = params;
  c.header["has_mask"] = ck.mask.has_value();
  c.header["provenance"] = ck.provenance;
  for (const auto& t : net.parameters()) {
    c.payload.append(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(Real));
  }
  if (ck.mask) {
    if (!ck.mask->matches(net)) throw Error(ErrorKind::kShape, "mask does not match network");
    for (const auto& k : ck.mask->keep) c.payload.append(reinterpret_cast<const char*>(k.data()), k.size());
  }
  return encode_container(kCheckpointMagic, kCheckpointVersion, c);
}

inline Checkpoint decode_checkpoint(std::string_view bytes, const std::string& what = "checkpoint") {
  Container c = decode_container(bytes, kCheckpointMagic, kCheckpointVersion, what);
  Checkpoint ck;
  try {
    const auto& h = c.header;
    std::vector<LayerSpec> layers;
    for (const auto& l : h.at("layers")) layers.push_back(layer_from_json(l));
    const auto in = h.at("input_shape");
    ck.network = Network(h.at("architecture").get<std::string>(),
                         {in.at(0).get<std::size_t>(), in.at(1).get<std::size_t>(), in.at(2).get<std::size_t>()},
                         std::move(layers));
    ck.network.set_seed(h.at("seed").get<std::uint64_t>());
    ck.provenance = h.value("provenance", nlohmann::json::object());
    const auto& declared = h.at("parameters");
    if (declared.size() != ck.network.parameters().size()) throw Error(ErrorKind::kCorruptFile, what + ": parameter list mismatch");
    std::size_t need = 0;
    for (std::size_t i = 0; i < declared.size(); ++i) {
      if (declared[i].at("shape").get<Shape>() != ck.network.parameters()[i].shape()) {
        throw Error(ErrorKind::kCorruptFile, what + ": parameter shape mismatch at " + std::to_string(i));
      }
      need += ck.network.parameters()[i].size();
    }
    const bool has_mask = h.at("has_mask").get<bool>();
    const std::size_t expected = need * sizeof(Real) + (has_mask ? need : 0);
    if (c.payload.size() != expected) throw Error(ErrorKind::kCorruptFile, what + ": payload size mismatch");
    std::size_t pos = 0;
    for (auto& t : ck.network.parameters()) {
      std::memcpy(t.data(), c.payload.data() + pos, t.size() * sizeof(Real));
      pos += t.size() * sizeof(Real);
    }
    if (has_mask) {
      SparsityMask m;
      for (const auto& t : ck.network.parameters()) {
        m.keep.emplace_back(c.payload.begin() + static_cast<std::ptrdiff_t>(pos),
                            c.payload.begin() + static_cast<std::ptrdiff_t>(pos + t.size()));
        pos += t.size();
      }
      ck.mask = std::move(m);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kCorruptFile, what + ": malformed header (" + e.what() + ")");
  }
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  write_file(path, encode_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path), path.string());
}

}  // namespace cexample
