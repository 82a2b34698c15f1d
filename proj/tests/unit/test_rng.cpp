#include "teamcoord/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <numeric>
#include <vector>

using teamcoord::Rng;

TEST(Rng, SameSeedSameStream)
{
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i)
    ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, EngineMatchesStandardSequence)
{
  // The 10000th output of a default-seeded mt19937_64 is fixed by the standard.
  Rng rng(5489u);
  std::uint64_t x = 0;
  for (int i = 0; i < 10000; ++i)
    x = rng.next_u64();
  EXPECT_EQ(x, 9981545732273789042ULL);
}

TEST(Rng, BelowStaysInRangeAndCoversIt)
{
  Rng rng(7);
  std::array<int, 7> counts{};
  for (int i = 0; i < 70000; ++i) {
    const auto x = rng.below(7);
    ASSERT_LT(x, 7u);
    ++counts[x];
  }
  for (int c : counts)
    EXPECT_NEAR(c, 10000, 500);
  EXPECT_EQ(rng.below(1), 0u);
}

TEST(Rng, UniformBounds)
{
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform(0.8, 1.2);
    ASSERT_GE(u, 0.8);
    ASSERT_LT(u, 1.2);
  }
}

TEST(Rng, NormalMoments)
{
  Rng rng(11);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Rng, ShuffleIsAPermutation)
{
  Rng rng(1);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(std::span(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i)
    EXPECT_EQ(sorted[i], i);
  EXPECT_NE(v, sorted);
}

TEST(MixSeed, DistinguishesTuples)
{
  EXPECT_NE(teamcoord::mix_seed({1, 5, 2}), teamcoord::mix_seed({1, 2, 5}));
  EXPECT_EQ(teamcoord::mix_seed({9, 9}), teamcoord::mix_seed({9, 9}));
}
