#include <gtest/gtest.h>

#include "cexample/dataset.hpp"
#include "cexample/frequency.hpp"
#include "cexample/train.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace cexample;

namespace {

Real max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

Tensor random_tensor(Rng& rng, ImageShape s) {
  Tensor t(s.to_shape());
  for (auto& v : t) v = uniform01(rng);
  return t;
}

}  // namespace

TEST(Dct, MatchesDefinitionOn4x4) {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = oracle::random_matrix(rng, 4, 4);
    EXPECT_LT(max_abs(dct2(x) - oracle::naive_dct2(x)), 1e-9);
  }
}

TEST(Dct, MatchesDefinitionOnRectangles) {
  Rng rng(2);
  const Matrix x = oracle::random_matrix(rng, 5, 7);
  EXPECT_LT(max_abs(dct2(x) - oracle::naive_dct2(x)), 1e-9);
}

TEST(Dct, RoundTripUpTo64) {
  Rng rng(3);
  for (Eigen::Index n : {1, 2, 3, 8, 17, 32, 64}) {
    const Matrix x = oracle::random_matrix(rng, n, n);
    EXPECT_LT(max_abs(idct2(dct2(x)) - x), 1e-9) << n;
    EXPECT_LT(max_abs(dct2(idct2(x)) - x), 1e-9) << n;
  }
}

TEST(Dct, Parseval) {
  Rng rng(4);
  for (Eigen::Index n : {4, 16, 64}) {
    const Matrix x = oracle::random_matrix(rng, n, n);
    const Real e = x.squaredNorm();
    EXPECT_NEAR(dct2(x).squaredNorm(), e, 1e-9 * e);
  }
}

TEST(Dct, ConstantImageIsPureDc) {
  const Real c = 0.37;
  const Matrix w = dct2(Matrix::Constant(8, 8, c));
  EXPECT_NEAR(w(0, 0), c * 8.0, 1e-12);
  Matrix rest = w;
  rest(0, 0) = 0.0;
  EXPECT_LT(max_abs(rest), 1e-9);
}

TEST(Dct, UnitDcInvertsToConstant) {
  Matrix w = Matrix::Zero(6, 6);
  w(0, 0) = 1.0;
  const Matrix x = idct2(w);
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = 0; j < 6; ++j) EXPECT_NEAR(x(i, j), 1.0 / 6.0, 1e-12);
  }
  EXPECT_EQ(max_abs(idct2(Matrix::Zero(6, 6))), 0.0);
}

TEST(Dct, EmptyMatrixIsRejected) { EXPECT_THROW(dct2(Matrix(0, 0)), Error); }

TEST(HighPassMask, PaperScaleCount) {
  const auto m = make_highpass_mask(224, 224, 20);
  EXPECT_EQ(m.zero_count(), 230u);
  EXPECT_EQ(m.zero_count(), oracle::band_pairs(224, 224, 20));
  EXPECT_NEAR(100.0 * 230.0 / (224.0 * 224.0), 0.46, 0.005);
}

TEST(HighPassMask, SmallBandPositions) {
  const auto m = make_highpass_mask(32, 32, 2);
  EXPECT_EQ(m.zero_count(), 5u);
  for (auto [i, j] : {std::pair{0, 1}, {1, 0}, {0, 2}, {1, 1}, {2, 0}}) EXPECT_TRUE(m.masked(i, j));
  EXPECT_FALSE(m.masked(0, 0));
  EXPECT_FALSE(m.masked(0, 3));
}

TEST(HighPassMask, CountsMatchEnumeration) {
  for (std::size_t h : {4, 7, 32}) {
    for (std::size_t w : {4, 9, 32}) {
      for (std::size_t k = 0; k < h + w - 1; ++k) {
        EXPECT_EQ(make_highpass_mask(h, w, k).zero_count(), oracle::band_pairs(h, w, k)) << h << "x" << w << " k=" << k;
      }
    }
  }
}

TEST(HighPassMask, TriangularFormulaBelowMinDimension) {
  for (std::size_t k = 0; k < 32; ++k) {
    std::size_t expected = 0;
    for (std::size_t s = 1; s <= k; ++s) expected += s + 1;
    EXPECT_EQ(make_highpass_mask(32, 32, k).zero_count(), expected);
  }
}

TEST(HighPassMask, ZeroDcAndLimits) {
  EXPECT_EQ(make_highpass_mask(8, 8, 0).zero_count(), 0u);
  EXPECT_EQ(make_highpass_mask(8, 8, 0, true).zero_count(), 1u);
  EXPECT_EQ(make_highpass_mask(8, 8, 2, true).zero_count(), 6u);
  EXPECT_NO_THROW(make_highpass_mask(8, 8, 14));
  EXPECT_THROW(make_highpass_mask(8, 8, 15), Error);
}

TEST(HighPass, BandZeroIsIdentity) {
  Rng rng(5);
  const Tensor x = random_tensor(rng, {3, 16, 16});
  const Tensor y = apply_highpass(x, make_highpass_mask(16, 16, 0));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i], 1e-9);
}

TEST(HighPass, ProjectionIsIdempotentAndClearsBand) {
  Rng rng(6);
  const Tensor x = random_tensor(rng, {3, 32, 32});
  for (std::size_t k : {1, 2, 3, 10}) {
    const auto mask = make_highpass_mask(32, 32, k);
    const Tensor once = apply_highpass(x, mask), twice = apply_highpass(once, mask);
    for (std::size_t i = 0; i < x.size(); ++i) ASSERT_NEAR(once[i], twice[i], 1e-7);
    for (const auto& ch : to_frequency(once).channels) {
      for (std::size_t i = 0; i < 32; ++i) {
        for (std::size_t j = 0; j < 32; ++j) {
          if (mask.masked(i, j)) {
            EXPECT_LT(std::abs(ch(i, j)), 1e-7);
          }
        }
      }
    }
  }
}

TEST(HighPass, KeepsShapeAndRejectsMismatch) {
  Rng rng(7);
  const Tensor x = random_tensor(rng, {2, 8, 12});
  EXPECT_EQ(apply_highpass(x, 3).shape(), x.shape());
  EXPECT_THROW(apply_highpass(x, make_highpass_mask(8, 8, 2)), Error);
}

TEST(HighPass, FrequencyRoundTripOnImages) {
  Rng rng(8);
  const Tensor x = random_tensor(rng, {3, 32, 32});
  const Tensor y = from_frequency(to_frequency(x));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i], 1e-12);
}

TEST(Saliency, InputIndependentNetworkGivesZeroMap) {
  auto net = make_network("cnn-tiny", {3, 8, 8}, 10, 1);
  for (auto& w : net.parameters()[0]) w = 0.0;
  const Dataset d = synth_dataset(1, 10, 20, 8, 8);
  for (const auto& m : frequency_saliency(net, d, 20)) EXPECT_EQ(max_abs(m), 0.0);
}

TEST(Saliency, MatchesFiniteDifferencesInFrequencySpace) {
  const auto net = gradcheck::probe_net(31);
  const Dataset d = synth_dataset(2, 10, 10, 8, 8);
  const auto maps = frequency_saliency(net, d, 1);
  const ImageShape s{3, 8, 8};
  const FrequencyGrid w0 = to_frequency(d.image(0), s);
  const std::size_t label = d.label(0);
  auto loss_at = [&](const FrequencyGrid& g) { return cross_entropy_loss(net, from_frequency(g), label); };
  Rng rng(9);
  const Real h = 1e-4;
  for (int probe = 0; probe < 20; ++probe) {
    const std::size_t c = uniform_index(rng, 3), i = uniform_index(rng, 8), j = uniform_index(rng, 8);
    FrequencyGrid up = w0, down = w0;
    up.channels[c](i, j) += h;
    down.channels[c](i, j) -= h;
    const Real fd = std::abs((loss_at(up) - loss_at(down)) / (2.0 * h));
    EXPECT_LT(gradcheck::relative_error(maps[c](i, j), fd), 1e-2) << c << "," << i << "," << j;
  }
}

TEST(Saliency, OutputDimsMatchImage) {
  const auto net = make_network("cnn-small", {3, 32, 32}, 10, 1);
  const Dataset d = synth_dataset(3, 10, 12, 32, 32);
  const auto maps = frequency_saliency(net, d, 12);
  ASSERT_EQ(maps.size(), 3u);
  for (const auto& m : maps) {
    EXPECT_EQ(m.rows(), 32);
    EXPECT_EQ(m.cols(), 32);
    EXPECT_GE(m.minCoeff(), 0.0);
  }
  EXPECT_THROW(frequency_saliency(net, d, 0), Error);
  EXPECT_THROW(frequency_saliency(net, d, 13), Error);
}

TEST(Saliency, TrainedModelFavoursLowFrequencies) {
  const Dataset train = synth_dataset(10, 10, 1000, 32, 32);
  const Dataset test = synth_dataset(11, 10, 200, 32, 32, Split::kTest);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 4;
  auto net = make_network("cnn-small", {3, 32, 32}, 10, 4);
  train_in_place(net, train, cfg);
  const auto [low, high] = band_means(frequency_saliency(net, test, 200), 4);
  EXPECT_GT(low, high);
}
