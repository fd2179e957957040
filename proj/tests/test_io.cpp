#include <gtest/gtest.h>
#include <png.h>

#include <filesystem>

#include "cexample/checkpoint.hpp"
#include "cexample/fingerprint_io.hpp"
#include "cexample/hash.hpp"
#include "cexample/image_io.hpp"
#include "cexample/pruning.hpp"

using namespace cexample;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cexample-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kIo;
}

Container sample_container() {
  Container c;
  c.header = {{"name", "x"}, {"values", {1, 2, 3}}};
  c.payload = std::string("\x00\x01\x02\xff", 4);
  return c;
}

FingerprintSet sample_set() {
  FingerprintSet set;
  set.config.method = Method::kLtrc;
  set.config.delta = 0.03;
  set.config.band_k = 2;
  set.config.examples = 3;
  set.config.seed = 77;
  set.base_hash = "abc123";
  set.base_architecture = "cnn-tiny";
  set.provenance = {{"producer", {{"command", "test"}}}};
  for (std::size_t i = 0; i < 3; ++i) {
    CExample e;
    e.image = random_start(i + 1, {3, 4, 5});
    e.image[0] = -0.0123456789012345;  // LTRC images may leave [0, 1]
    e.label = i * 3;
    e.converged = i != 1;
    e.final_loss = 1e-7 * static_cast<Real>(i + 1);
    e.steps_used = 10 + i;
    e.seed = 1000 + i;
    set.examples.push_back(std::move(e));
  }
  return set;
}

}  // namespace

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  Sha256 h;
  h.update("a").update("bc");
  EXPECT_EQ(h.hex(), sha256_hex("abc"));
}

TEST(Sha256, FileHashMatchesBytes) {
  const fs::path p = scratch_dir("sha") / "f.bin";
  const std::string bytes(100000, 'z');
  write_file(p, bytes);
  EXPECT_EQ(file_sha256(p), sha256_hex(bytes));
  EXPECT_EQ(kind_of([&] { file_sha256(p.parent_path() / "missing"); }), ErrorKind::kIo);
}

TEST(Container, RoundTrip) {
  const Container c = sample_container();
  const std::string bytes = encode_container("TESTMAG", 3, c);
  EXPECT_EQ(bytes.substr(0, 8), std::string("TESTMAG\0", 8));
  const Container back = decode_container(bytes, "TESTMAG", 3, "t");
  EXPECT_EQ(back.header, c.header);
  EXPECT_EQ(back.payload, c.payload);
}

TEST(Container, Errors) {
  const std::string bytes = encode_container("TESTMAG", 3, sample_container());
  EXPECT_EQ(kind_of([&] { decode_container(bytes, "OTHER", 3, "t"); }), ErrorKind::kCorruptFile);
  EXPECT_EQ(kind_of([&] { decode_container(bytes, "TESTMAG", 4, "t"); }), ErrorKind::kVersion);
  EXPECT_EQ(kind_of([&] { decode_container(bytes + "x", "TESTMAG", 3, "t"); }), ErrorKind::kCorruptFile);
  for (std::size_t cut : {0ul, 5ul, 10ul, 20ul, bytes.size() - 1}) {
    EXPECT_EQ(kind_of([&] { decode_container(bytes.substr(0, cut), "TESTMAG", 3, "t"); }), ErrorKind::kCorruptFile)
        << cut;
  }
  std::string garbled = bytes;
  garbled[20] = '{';
  garbled[21] = '{';
  EXPECT_EQ(kind_of([&] { decode_container(garbled, "TESTMAG", 3, "t"); }), ErrorKind::kCorruptFile);
}

TEST(Container, MissingFileIsIoError) {
  EXPECT_EQ(kind_of([] { read_file("/nonexistent/dir/file.bin"); }), ErrorKind::kIo);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Checkpoint ck{make_network("cnn-small", {3, 32, 32}, 10, 5), std::nullopt, {{"role", "base"}}};
  const Checkpoint back = decode_checkpoint(encode_checkpoint(ck));
  EXPECT_EQ(back.network, ck.network);
  EXPECT_EQ(back.network.seed(), 5u);
  EXPECT_FALSE(back.mask.has_value());
  EXPECT_EQ(back.provenance, ck.provenance);
  EXPECT_EQ(network_hash(back.network), network_hash(ck.network));
  EXPECT_EQ(encode_checkpoint(back), encode_checkpoint(ck));
}

TEST(Checkpoint, MaskSurvivesRoundTrip) {
  PruneConfig cfg;
  cfg.ratio = 0.5;
  const auto [net, mask] = magnitude_prune(make_network("cnn-tiny", {3, 8, 8}, 10, 2), cfg);
  Checkpoint ck{net, mask, {}};
  const fs::path p = scratch_dir("ckpt") / "m.ckpt";
  save_checkpoint(p, ck);
  const Checkpoint back = load_checkpoint(p);
  ASSERT_TRUE(back.mask.has_value());
  EXPECT_EQ(*back.mask, mask);
  EXPECT_EQ(back.network, net);
}

TEST(Checkpoint, HashTracksParametersNotProvenance) {
  Network a = make_network("cnn-tiny", {3, 8, 8}, 10, 2);
  Network b = a;
  b.set_seed(99);
  EXPECT_EQ(network_hash(a), network_hash(b));
  b.parameters()[0][0] = std::nextafter(b.parameters()[0][0], 1.0);
  EXPECT_NE(network_hash(a), network_hash(b));
  EXPECT_NE(network_hash(a), network_hash(make_network("cnn-tiny", {3, 8, 8}, 10, 3)));
  EXPECT_EQ(network_hash(a).size(), 64u);
}

TEST(Checkpoint, CorruptionIsDetected) {
  const std::string bytes = encode_checkpoint({make_network("cnn-tiny", {3, 8, 8}, 10, 1), std::nullopt, {}});
  EXPECT_EQ(kind_of([&] { decode_checkpoint(bytes.substr(0, bytes.size() - 8)); }), ErrorKind::kCorruptFile);
  EXPECT_EQ(kind_of([&] { decode_checkpoint(encode_container(kCheckpointMagic, 2, Container{})); }),
            ErrorKind::kVersion);
  Container c = decode_container(bytes, kCheckpointMagic, kCheckpointVersion, "t");
  c.header["parameters"][0]["shape"] = {1, 1};
  EXPECT_EQ(kind_of([&] { decode_checkpoint(encode_container(kCheckpointMagic, kCheckpointVersion, c)); }),
            ErrorKind::kCorruptFile);
  c.header.erase("layers");
  EXPECT_EQ(kind_of([&] { decode_checkpoint(encode_container(kCheckpointMagic, kCheckpointVersion, c)); }),
            ErrorKind::kCorruptFile);
  const std::string foreign = encode_fingerprint_set(sample_set());
  EXPECT_EQ(kind_of([&] { decode_checkpoint(foreign); }), ErrorKind::kCorruptFile);
}

TEST(FingerprintSetIo, RoundTripIsBitExact) {
  const FingerprintSet set = sample_set();
  const FingerprintSet back = decode_fingerprint_set(encode_fingerprint_set(set));
  ASSERT_EQ(back.examples.size(), set.examples.size());
  for (std::size_t i = 0; i < set.examples.size(); ++i) {
    const auto &a = set.examples[i], &b = back.examples[i];
    EXPECT_EQ(a.image.shape(), b.image.shape());
    EXPECT_EQ(0, std::memcmp(a.image.data(), b.image.data(), a.image.size() * sizeof(Real)));
    EXPECT_EQ(a.label, b.label);
    EXPECT_EQ(a.converged, b.converged);
    EXPECT_EQ(a.final_loss, b.final_loss);
    EXPECT_EQ(a.steps_used, b.steps_used);
    EXPECT_EQ(a.seed, b.seed);
  }
  EXPECT_EQ(to_json(back.config), to_json(set.config));
  EXPECT_EQ(back.base_hash, set.base_hash);
  EXPECT_EQ(back.base_architecture, set.base_architecture);
  EXPECT_EQ(back.provenance, set.provenance);
  EXPECT_FALSE(back.timestamp.has_value());
  EXPECT_EQ(encode_fingerprint_set(back), encode_fingerprint_set(set));
}

TEST(FingerprintSetIo, TimestampIsOptional) {
  FingerprintSet set = sample_set();
  set.timestamp = "2024-01-01T00:00:00Z";
  EXPECT_EQ(decode_fingerprint_set(encode_fingerprint_set(set)).timestamp, set.timestamp);
}

TEST(FingerprintSetIo, CorruptionIsDetected) {
  const fs::path dir = scratch_dir("set");
  const std::string bytes = encode_fingerprint_set(sample_set());
  write_file(dir / "cut.cexs", bytes.substr(0, bytes.size() / 2));
  EXPECT_EQ(kind_of([&] { load_set(dir / "cut.cexs"); }), ErrorKind::kCorruptFile);
  EXPECT_EQ(kind_of([&] { decode_fingerprint_set(encode_container(kFingerprintMagic, 9, Container{})); }),
            ErrorKind::kVersion);
  Container c = decode_container(bytes, kFingerprintMagic, kFingerprintVersion, "t");
  c.header["examples"].erase(0);
  EXPECT_EQ(kind_of([&] { decode_fingerprint_set(encode_container(kFingerprintMagic, kFingerprintVersion, c)); }),
            ErrorKind::kCorruptFile);
  c.header["config"]["method"] = "bogus";
  EXPECT_THROW(decode_fingerprint_set(encode_container(kFingerprintMagic, kFingerprintVersion, c)), Error);
}

TEST(FingerprintSetIo, MixedShapesAreRejected) {
  FingerprintSet set = sample_set();
  set.examples[1].image = random_start(5, {3, 4, 4});
  EXPECT_EQ(kind_of([&] { encode_fingerprint_set(set); }), ErrorKind::kShape);
}

TEST(Png, WritesReadableImageWithText) {
  RgbImage img(5, 3, 0);
  img.set(4, 2, 255, 10, 20);
  const fs::path p = scratch_dir("png") / "img.png";
  write_png(p, img, {{"producer", "cexample test"}});

  png_image read{};
  read.version = PNG_IMAGE_VERSION;
  ASSERT_TRUE(png_image_begin_read_from_file(&read, p.c_str()));
  read.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(read));
  ASSERT_TRUE(png_image_finish_read(&read, nullptr, pixels.data(), 0, nullptr));
  EXPECT_EQ(read.width, 5u);
  EXPECT_EQ(read.height, 3u);
  EXPECT_EQ(pixels, img.pixels);

  const std::string bytes = read_file(p);
  EXPECT_NE(bytes.find(std::string("tEXtproducer\0cexample test", 26)), std::string::npos);
}

TEST(Png, ContactSheetLayout) {
  FingerprintSet set = sample_set();
  const RgbImage sheet = contact_sheet(set, 2);
  EXPECT_EQ(sheet.width, 2 * 6 + 1);
  EXPECT_EQ(sheet.height, 2 * 5 + 1);
  EXPECT_EQ(to_byte(-0.5), 0);
  EXPECT_EQ(to_byte(2.0), 255);
  EXPECT_EQ(to_byte(0.5), 128);
}
