#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "cexample/error.hpp"

namespace cexample {

static_assert(std::endian::native == std::endian::little, "binary containers assume a little-endian host");

/// Self-describing binary container shared by checkpoints and fingerprint sets:
///
///   magic    8 bytes
///   version  u32 little-endian
///   hlen     u64 little-endian
///   header   hlen bytes of UTF-8 JSON
///   plen     u64 little-endian
///   payload  plen bytes (raw little-endian arrays described by the header)
///
/// The file must end exactly after the payload.
struct Container {
  nlohmann::json header;
  std::string payload;
};

namespace detail {

template <typename T>
void put_le(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get_le(std::string_view bytes, std::size_t& pos, const std::string& what) {
  if (bytes.size() - pos < sizeof(T)) throw Error(ErrorKind::kCorruptFile, what + ": truncated");
  T v;
  std::memcpy(&v, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace detail

inline std::string encode_container(std::string_view magic, std::uint32_t version, const Container& c) {
  std::string out(magic);
  out.resize(8, '\0');
  detail::put_le<std::uint32_t>(out, version);
  const std::string header = c.header.dump();
  detail::put_le<std::uint64_t>(out, header.size());
  out += header;
  detail::put_le<std::uint64_t>(out, c.payload.size());
  out += c.payload;
  return out;
}

inline Container decode_container(std::string_view bytes, std::string_view magic, std::uint32_t version,
                                  const std::string& what) {
  std::string expected(magic);
  expected.resize(8, '\0');
  if (bytes.size() < 8 || bytes.substr(0, 8) != expected) {
    throw Error(ErrorKind::kCorruptFile, what + ": bad magic");
  }
  std::size_t pos = 8;
  const auto got_version = detail::get_le<std::uint32_t>(bytes, pos, what);
  if (got_version != version) {
    throw Error(ErrorKind::kVersion, what + ": format version " + std::to_string(got_version) + ", expected " +
                                         std::to_string(version));
  }
  const auto hlen = detail::get_le<std::uint64_t>(bytes, pos, what);
  if (bytes.size() - pos < hlen) throw Error(ErrorKind::kCorruptFile, what + ": truncated header");
  Container c;
  try {
    c.header = nlohmann::json::parse(bytes.substr(pos, hlen));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kCorruptFile, what + ": unreadable header (" + e.what() + ")");
  }
  pos += hlen;
  const auto plen = detail::get_le<std::uint64_t>(bytes, pos, what);
  if (bytes.size() - pos != plen) throw Error(ErrorKind::kCorruptFile, what + ": payload length mismatch");
  c.payload.assign(bytes.substr(pos));
  return c;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

}  // namespace cexample
