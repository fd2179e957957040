#include <gtest/gtest.h>

#include <filesystem>

#include "cexample/container.hpp"
#include "cexample/dataset.hpp"
#include "cexample/train.hpp"

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

const Dataset& train_set() {
  static const Dataset d = synth_dataset(1, 10, 2000, 32, 32);
  return d;
}

const Dataset& test_set() {
  static const Dataset d = synth_dataset(2, 10, 1000, 32, 32, Split::kTest);
  return d;
}

}  // namespace

TEST(Cifar, BatchSizeMatchesPublicFormat) {
  EXPECT_EQ(kCifarRecordBytes * kCifarRecordsPerBatch, 30730000u);
  EXPECT_EQ(cifar10_train_files().size() * kCifarRecordsPerBatch, 50000u);
}

TEST(Cifar, ByteScalingEndpoints) {
  std::string bytes(2 * kCifarRecordBytes, '\0');
  bytes[0] = 3;
  bytes[kCifarRecordBytes] = 9;
  for (std::size_t j = 1; j < kCifarRecordBytes; ++j) bytes[kCifarRecordBytes + j] = static_cast<char>(255);
  const Dataset d = parse_cifar_records(bytes, {3, 32, 32}, 10, Split::kTest, "mem");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.label(0), 3u);
  EXPECT_EQ(d.label(1), 9u);
  for (Real v : d.image(0)) EXPECT_EQ(v, 0.0);
  for (Real v : d.image(1)) EXPECT_EQ(v, 1.0);
}

TEST(Cifar, EncodeParseRoundTrip) {
  const Dataset d = synth_dataset(4, 10, 20, 32, 32);
  const Dataset back = parse_cifar_records(encode_cifar_records(d), d.shape, 10, Split::kTrain, "mem");
  EXPECT_EQ(back.labels, d.labels);
  for (std::size_t i = 0; i < d.pixels.size(); ++i) EXPECT_NEAR(back.pixels[i], d.pixels[i], 0.5 / 255.0 + 1e-12);
}

TEST(Cifar, TruncatedOrBadRecordsAreCorrupt) {
  std::string bytes(kCifarRecordBytes * 2 - 5, '\0');
  EXPECT_EQ(kind_of([&] { parse_cifar_records(bytes, {3, 32, 32}, 10, Split::kTrain, "mem"); }),
            ErrorKind::kCorruptDataset);
  std::string bad(kCifarRecordBytes, '\0');
  bad[0] = 10;
  EXPECT_EQ(kind_of([&] { parse_cifar_records(bad, {3, 32, 32}, 10, Split::kTrain, "mem"); }),
            ErrorKind::kCorruptDataset);
}

TEST(Cifar, MissingDirectoryNamesExpectedFiles) {
  const fs::path dir = scratch_dir("cifar-missing");
  try {
    load_cifar10(dir);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCorruptDataset);
    EXPECT_NE(std::string(e.what()).find("data_batch_1.bin"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("test_batch.bin"), std::string::npos);
  }
}

TEST(Cifar, TruncatedBatchFileIsRejected) {
  const fs::path dir = scratch_dir("cifar-truncated");
  write_file(dir / "data_batch_1.bin", std::string(kCifarRecordBytes * 10, '\0'));
  EXPECT_EQ(kind_of([&] { load_cifar10(dir); }), ErrorKind::kCorruptDataset);
}

TEST(Synthetic, Deterministic) {
  const Dataset a = synth_dataset(9, 10, 100, 16, 16), b = synth_dataset(9, 10, 100, 16, 16);
  EXPECT_EQ(a.pixels, b.pixels);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(a.pixels, synth_dataset(10, 10, 100, 16, 16).pixels);
}

TEST(Synthetic, RangesAndBalance) {
  const Dataset& d = train_set();
  EXPECT_EQ(d.size(), 2000u);
  EXPECT_EQ(d.shape, (ImageShape{3, 32, 32}));
  std::vector<int> counts(10);
  for (auto l : d.labels) {
    ASSERT_LT(l, 10);
    ++counts[l];
  }
  for (int c : counts) EXPECT_EQ(c, 200);
  for (Real v : d.pixels) {
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
}

TEST(Synthetic, RejectsBadParameters) {
  EXPECT_THROW(synth_dataset(1, 1, 10, 8, 8), Error);
  EXPECT_THROW(synth_dataset(1, 10, 5, 8, 8), Error);
  EXPECT_THROW(synth_dataset(1, 10, 10, 2, 8), Error);
}

TEST(Train, DefaultConfigReaches95Percent) {
  TrainConfig cfg;
  cfg.seed = 3;
  auto [net, history] = train(make_network("cnn-small", {3, 32, 32}, 10, 3), train_set(), cfg);
  ASSERT_EQ(history.size(), cfg.epochs);
  EXPECT_LT(history.back().mean_loss, history.front().mean_loss);
  EXPECT_GE(accuracy(net, test_set()), 95.0);
}

TEST(Train, ZeroLearningRateLeavesParameters) {
  const auto net = make_network("cnn-tiny", {3, 32, 32}, 10, 1);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.learning_rate = 0.0;
  const auto result = train(net, train_set().head(100), cfg);
  EXPECT_EQ(result.network.parameters(), net.parameters());
}

TEST(Train, SameSeedSameParameters) {
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.seed = 5;
  const Dataset d = train_set().head(200);
  const auto a = train(make_network("cnn-small", {3, 32, 32}, 10, 2), d, cfg);
  const auto b = train(make_network("cnn-small", {3, 32, 32}, 10, 2), d, cfg);
  EXPECT_EQ(a.network.parameters(), b.network.parameters());
}

TEST(Train, DivergenceIsReported) {
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.learning_rate = 1e305;
  auto net = make_network("cnn-tiny", {3, 32, 32}, 10, 1);
  EXPECT_EQ(kind_of([&] { train_in_place(net, train_set().head(200), cfg); }), ErrorKind::kTrainingDiverged);
}

TEST(Train, InvalidConfigAndData) {
  TrainConfig cfg;
  cfg.batch_size = 0;
  auto net = make_network("cnn-tiny", {3, 32, 32}, 10, 1);
  EXPECT_EQ(kind_of([&] { train_in_place(net, train_set().head(10), cfg); }), ErrorKind::kParameter);
  EXPECT_EQ(kind_of([&] { train_in_place(net, Dataset{{3, 32, 32}, 10, Split::kTrain, {}, {}}, TrainConfig{}); }), ErrorKind::kEmptyInput);
  EXPECT_EQ(kind_of([&] { train_in_place(net, synth_dataset(1, 10, 10, 8, 8), TrainConfig{}); }),
            ErrorKind::kInputShape);
}

TEST(TrainVariants, SingleSeedMatchesManualTraining) {
  TrainConfig cfg;
  cfg.epochs = 1;
  const Dataset d = train_set().head(200);
  const std::uint64_t seed = 17;
  const auto variants = train_variants("cnn-small", d, cfg, std::span(&seed, 1));
  ASSERT_EQ(variants.size(), 1u);
  TrainConfig c = cfg;
  c.seed = derive_seed(seed, "train.order");
  auto manual = train(make_network("cnn-small", d.shape, 10, derive_seed(seed, "train.init")), d, c).network;
  EXPECT_EQ(variants[0].parameters(), manual.parameters());
  EXPECT_EQ(variants[0].seed(), seed);
}

TEST(TrainVariants, DistinctAndJobCountIndependent) {
  TrainConfig cfg;
  cfg.epochs = 1;
  const Dataset d = train_set().head(200);
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4};
  const auto serial = train_variants("cnn-tiny", d, cfg, seeds, 1);
  const auto parallel = train_variants("cnn-tiny", d, cfg, seeds, 3);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    EXPECT_EQ(serial[i], parallel[i]);
    for (std::size_t j = 0; j < i; ++j) {
      Real dist = 0.0;
      for (std::size_t p = 0; p < serial[i].parameters().size(); ++p) {
        for (std::size_t k = 0; k < serial[i].parameters()[p].size(); ++k) {
          const Real diff = serial[i].parameters()[p][k] - serial[j].parameters()[p][k];
          dist += diff * diff;
        }
      }
      EXPECT_GT(dist, 0.0);
    }
  }
}

TEST(TrainVariants, VariantAccuracyCloseToBase) {
  TrainConfig cfg;
  cfg.epochs = 3;
  const std::vector<std::uint64_t> seeds{100, 101, 102, 103};
  const auto nets = train_variants("cnn-small", train_set(), cfg, seeds);
  const Real base = accuracy(nets[0], test_set());
  Real mean = 0.0;
  for (std::size_t i = 1; i < nets.size(); ++i) mean += accuracy(nets[i], test_set()) / 3.0;
  EXPECT_NEAR(mean, base, 2.0);
}

TEST(Accuracy, EndpointsAndChance) {
  const Dataset d = train_set().head(500);
  Network zero("mlp", d.shape, architecture_layers("mlp", d.shape, 10));
  std::size_t label0 = 0;
  for (auto l : d.labels) label0 += l == 0;
  EXPECT_DOUBLE_EQ(accuracy(zero, d), 100.0 * static_cast<Real>(label0) / 500.0);
  EXPECT_NEAR(accuracy(zero, d), 10.0, 2.0);

  Dataset one = d.head(1);
  one.labels[0] = 0;
  EXPECT_EQ(accuracy(zero, one), 100.0);
  one.labels[0] = 4;
  EXPECT_EQ(accuracy(zero, one), 0.0);
  EXPECT_EQ(kind_of([&] { accuracy(zero, d.head(0)); }), ErrorKind::kEmptyInput);
}
