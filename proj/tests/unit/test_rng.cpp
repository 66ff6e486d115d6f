#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "nettomo/rng.hpp"

using nettomo::RngStream;
using nettomo::StreamKey;

TEST(Rng, SameKeySameSequence) {
  RngStream a(42, StreamKey{1, 2, 3});
  RngStream b(42, StreamKey{1, 2, 3});
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
  EXPECT_EQ(a.position(), 1000u);
}

TEST(Rng, DistinctKeysDiverge) {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t s = 0; s < 4; ++s) {
    for (std::uint64_t r = 0; r < 4; ++r) {
      for (std::uint64_t p = 0; p < 4; ++p) firsts.insert(RngStream(7, StreamKey{s, r, p})());
    }
  }
  EXPECT_EQ(firsts.size(), 64u);
  EXPECT_NE(RngStream(7, StreamKey{0, 0, 1})(), RngStream(8, StreamKey{0, 0, 1})());
}

TEST(Rng, UniformRange) {
  RngStream rng(1);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000.0, 0.5, 0.005);
}

TEST(Rng, UniformIndexChiSquare) {
  RngStream rng(3);
  constexpr std::size_t n = 7;
  constexpr int draws = 70000;
  std::vector<int> counts(n, 0);
  for (int i = 0; i < draws; ++i) {
    const auto k = rng.uniform_index(n);
    ASSERT_LT(k, n);
    ++counts[k];
  }
  double chi2 = 0.0;
  const double expected = draws / static_cast<double>(n);
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 22.46);  // df = 6, p = 0.001
}

TEST(Rng, BernoulliMean) {
  RngStream rng(5);
  int hits = 0;
  for (int i = 0; i < 100000; ++i) hits += rng.bernoulli(0.3);
  EXPECT_NEAR(hits / 100000.0, 0.3, 0.01);
}

TEST(Rng, WorksWithStandardDistributions) {
  RngStream rng(9);
  std::uniform_int_distribution<int> dist(1, 6);
  for (int i = 0; i < 100; ++i) {
    const int v = dist(rng);
    ASSERT_GE(v, 1);
    ASSERT_LE(v, 6);
  }
}
