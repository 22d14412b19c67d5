#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "bougerol/rng.hpp"

using namespace bougerol;

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox, KnownAnswers) {
  using detail::philox4x32_10;
  const auto zero = philox4x32_10({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(zero, (detail::PhiloxCounter{0x6627e8d5U, 0xe169c58dU, 0xbc57ac4cU, 0x9b00dbd8U}));
  const auto ones = philox4x32_10({0xffffffffU, 0xffffffffU, 0xffffffffU, 0xffffffffU}, {0xffffffffU, 0xffffffffU});
  EXPECT_EQ(ones, (detail::PhiloxCounter{0x408f276dU, 0x41c83b0eU, 0xa20bc7c6U, 0x6d5451fdU}));
  const auto pi = philox4x32_10({0x243f6a88U, 0x85a308d3U, 0x13198a2eU, 0x03707344U}, {0xa4093822U, 0x299f31d0U});
  EXPECT_EQ(pi, (detail::PhiloxCounter{0xd16cfe09U, 0x94fdccebU, 0x5001e420U, 0x24126ea1U}));
}

TEST(RngStream, SameSeedAndStreamReproduce) {
  RngStream a(42, 7);
  RngStream b(42, 7);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(a.next_u64(), b.next_u64());
  }
}

TEST(RngStream, DistinctStreamsAndSeedsDiffer) {
  RngStream a(42, 7);
  RngStream b(42, 8);
  RngStream c(43, 7);
  int equal_ab = 0;
  int equal_ac = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next_u64();
    equal_ab += x == b.next_u64();
    equal_ac += x == c.next_u64();
  }
  EXPECT_EQ(equal_ab, 0);
  EXPECT_EQ(equal_ac, 0);
}

TEST(RngStream, SubstreamIgnoresParentPosition) {
  RngStream parent(1, 2);
  const auto first = parent.substream(5).next_u64();
  parent.next_u64();
  parent.next_u64();
  EXPECT_EQ(parent.substream(5).next_u64(), first);
  EXPECT_NE(parent.substream(6).next_u64(), first);
}

TEST(RngStream, UniformIsOpenInterval) {
  RngStream rng(3, 0);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(RngStream, BelowIsUniformOverSmallRange) {
  RngStream rng(9, 1);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto k = rng.below(7);
    ASSERT_LT(k, 7U);
    ++counts[k];
  }
  double chi2 = 0.0;
  for (const int c : counts) {
    chi2 += (c - n / 7.0) * (c - n / 7.0) / (n / 7.0);
  }
  EXPECT_LT(chi2, 22.46);  // chi-square(6) 0.999 quantile
}

TEST(RngStream, NormalMoments) {
  RngStream rng(11, 4);
  const int n = 400000;
  double m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
  int tail = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    m1 += z;
    m2 += z * z;
    m3 += z * z * z;
    m4 += z * z * z * z;
    tail += std::fabs(z) > 3.0;
  }
  m1 /= n;
  m2 /= n;
  m3 /= n;
  m4 /= n;
  EXPECT_NEAR(m1, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(m2, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(m3, 0.0, 4.0 * std::sqrt(15.0 / n));
  EXPECT_NEAR(m4, 3.0, 4.0 * std::sqrt(96.0 / n));
  // P(|Z| > 3) = 0.0026998.
  EXPECT_NEAR(tail / static_cast<double>(n), 0.0026998, 4.0 * std::sqrt(0.0027 / n));
}

TEST(HashName, StableAndDistinct) {
  EXPECT_EQ(hash_name(""), 0xCBF29CE484222325ULL);
  EXPECT_EQ(hash_name("a"), 0xAF63DC4C8601EC8CULL);
  std::set<std::uint64_t> ids;
  for (std::uint64_t c = 0; c < 1000; ++c) {
    ids.insert(mix_stream(hash_name("purpose"), c));
  }
  EXPECT_EQ(ids.size(), 1000U);
}
