#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "cexample/random.hpp"
#include "cexample/tensor.hpp"

using namespace cexample;

TEST(Random, SplitmixKnownValue) {
  // First output of the reference splitmix64 generator seeded with 0.
  EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
}

TEST(Random, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Random, DeriveSeedSeparatesTagsAndIndices) {
  std::set<std::uint64_t> seen;
  for (const char* tag : {"train.init", "train.order", "prune", "fingerprint"}) {
    for (std::uint64_t i = 0; i < 50; ++i) seen.insert(derive_seed(42, tag, i));
  }
  EXPECT_EQ(seen.size(), 200u);
  EXPECT_EQ(derive_seed(42, "prune", 3), derive_seed(42, "prune", 3));
  EXPECT_NE(derive_seed(42, "prune"), derive_seed(43, "prune"));
}

TEST(Random, Uniform01Range) {
  Rng rng(5);
  for (int i = 0; i < 100000; ++i) {
    const double u = uniform01(rng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Random, UniformSymmetricMoments) {
  Rng rng(9);
  const double bound = 0.01;
  const int n = 100000;
  double sum = 0.0, sq = 0.0, worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = uniform_symmetric(rng, bound);
    sum += v;
    sq += v * v;
    worst = std::max(worst, std::abs(v));
  }
  const double sd = bound / std::sqrt(3.0);
  EXPECT_LT(std::abs(sum / n), 3.0 * sd / std::sqrt(double(n)));
  EXPECT_NEAR(std::sqrt(sq / n), sd, 0.02 * sd);
  EXPECT_LE(worst, bound);
}

TEST(Random, UniformSymmetricZeroBoundIsExactZero) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(uniform_symmetric(rng, 0.0), 0.0);
}

TEST(Random, UniformIndexCoversRange) {
  Rng rng(3);
  std::vector<int> counts(10);
  for (int i = 0; i < 10000; ++i) ++counts[uniform_index(rng, 10)];
  for (int c : counts) EXPECT_NEAR(c, 1000, 150);
}

TEST(Tensor, ShapeMismatchThrows) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<Real>(5)), Error);
  try {
    Tensor({2, 3}, std::vector<Real>(5));
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
  }
}

TEST(Tensor, SizeIsShapeProduct) {
  Tensor t({3, 4, 5}, 1.5);
  EXPECT_EQ(t.size(), 60u);
  EXPECT_EQ(shape_string(t.shape()), "[3x4x5]");
  EXPECT_TRUE(t.all_finite());
  t[7] = std::nan("");
  EXPECT_FALSE(t.all_finite());
}
