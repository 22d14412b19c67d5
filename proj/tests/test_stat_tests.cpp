#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "bougerol/errors.hpp"
#include "bougerol/rng.hpp"
#include "bougerol/special_functions.hpp"
#include "bougerol/stat_tests.hpp"

using namespace bougerol;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t stream, double shift = 0.0, double scale = 1.0) {
  RngStream rng(77, stream);
  std::vector<double> out(n);
  for (auto& x : out) {
    x = shift + scale * rng.normal();
  }
  return out;
}

std::vector<Point2> points(std::size_t n, std::uint64_t stream, double rho = 0.0, double shift = 0.0) {
  RngStream rng(78, stream);
  std::vector<Point2> out(n);
  for (auto& p : out) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    p = {z1 + shift, rho * z1 + std::sqrt(1.0 - rho * rho) * z2};
  }
  return out;
}

}  // namespace

TEST(EstimateMean, KnownSample) {
  const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
  const auto est = estimate_mean(xs);
  EXPECT_DOUBLE_EQ(est.mean, 2.5);
  EXPECT_NEAR(est.sd, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_NEAR(est.std_error, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(est.n, 4U);
  const auto empty = estimate_mean(std::vector<double>{});
  EXPECT_EQ(empty.n, 0U);
  EXPECT_TRUE(std::isnan(empty.mean));
}

TEST(KsStatistic, HandComputedCases) {
  EXPECT_NEAR(ks_statistic({1.0, 2.0, 3.0}, {1.5, 2.5, 3.5}), 1.0 / 3.0, 1e-15);
  // Ties across samples: ECDFs at 1 are 2/3 and 1/3.
  EXPECT_NEAR(ks_statistic({1.0, 1.0, 2.0}, {1.0, 2.0, 2.0}), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(ks_statistic({1.0, 2.0}, {1.0, 2.0}), 0.0);
  EXPECT_EQ(ks_statistic({0.0}, {5.0}), 1.0);
}

TEST(KsTwoSample, PValueFromKolmogorovLimit) {
  const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
  const std::vector<double> ys = {2.5, 3.5, 4.5, 5.5};
  const auto v = ks_two_sample(xs, ys, 0.01);
  EXPECT_NEAR(v.statistic, 0.5, 1e-15);
  EXPECT_NEAR(v.p_value, 1.0 - kolmogorov_cdf(0.5 * std::sqrt(2.0)), 1e-15);
  EXPECT_EQ(v.kind, "ks_two_sample");
  EXPECT_THROW(ks_two_sample(std::vector<double>{}, ys), DomainError);
}

TEST(KsTwoSample, AcceptsSameLawRejectsShift) {
  EXPECT_TRUE(ks_two_sample(normals(5000, 1), normals(5000, 2)).pass);
  const auto shifted = ks_two_sample(normals(5000, 3), normals(5000, 4, 0.15));
  EXPECT_FALSE(shifted.pass);
  EXPECT_LT(shifted.p_value, 1e-4);
}

TEST(KsOneSample, NormalSample) {
  const auto v = ks_one_sample(normals(5000, 5), normal_cdf, 0.01);
  EXPECT_TRUE(v.pass);
  EXPECT_FALSE(ks_one_sample(normals(5000, 6, 0.0, 1.2), normal_cdf, 0.01).pass);
}

TEST(MeanWithinCi, ZScoreAndAllowance) {
  const auto xs = normals(10000, 7, 0.1);
  const auto centred = mean_within_ci(xs, 0.1, 3.0);
  EXPECT_TRUE(centred.pass);
  EXPECT_LE(std::fabs(centred.z_score), 3.0);
  const auto off = mean_within_ci(xs, 0.2, 3.0);
  EXPECT_FALSE(off.pass);
  EXPECT_LT(off.z_score, -3.0);
  // A documented allowance widens the band additively.
  EXPECT_TRUE(mean_within_ci(xs, 0.2, 3.0, "mean", 0.1).pass);
  EXPECT_THROW(mean_within_ci(std::vector<double>(10, 1.0), 1.0), DomainError);
}

TEST(MeanWithinCi, ConstantSample) {
  const std::vector<double> xs(200, 2.0);
  EXPECT_TRUE(mean_within_ci(xs, 2.0).pass);
  EXPECT_FALSE(mean_within_ci(xs, 2.1).pass);
}

TEST(EstimatesAgree, JointStandardError) {
  const MeanEstimate a{1.0, 0.1, 1.0, 100};
  const MeanEstimate b{1.5, 0.1, 1.0, 100};
  const auto v = estimates_agree(a, b, 3.0);
  EXPECT_NEAR(v.z_score, -0.5 / std::hypot(0.1, 0.1), 1e-12);
  EXPECT_FALSE(v.pass);
  EXPECT_TRUE(estimates_agree(a, b, 4.0).pass);
}

TEST(Ranks, AverageTies) {
  const std::vector<double> xs = {10.0, 30.0, 20.0, 20.0};
  const auto r = ranks(xs);
  EXPECT_EQ(r, (std::vector<double>{1.0, 4.0, 2.5, 2.5}));
}

TEST(Spearman, DetectsMonotoneDependence) {
  auto xs = normals(2000, 8);
  std::vector<double> ys(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ys[i] = std::exp(xs[i]);
  }
  const auto v = spearman_dependence(xs, ys, 3.0);
  EXPECT_NEAR(v.statistic, 1.0, 1e-12);
  EXPECT_TRUE(v.pass);
  EXPECT_FALSE(spearman_dependence(normals(2000, 9), normals(2000, 10), 3.0).pass);
}

TEST(Energy, ProjectedMatchesExactStatistic) {
  // In the plane |z| = (pi/2) E|<theta, z>| over uniform directions, so the
  // direction-averaged statistic converges to the exact V-statistic.
  const auto xs = points(150, 11, 0.5);
  const auto ys = points(120, 12, -0.3, 0.4);
  std::vector<Point2> pooled(xs);
  pooled.insert(pooled.end(), ys.begin(), ys.end());
  std::vector<std::uint8_t> labels(pooled.size(), 0);
  std::fill(labels.begin(), labels.begin() + 150, 1);
  const double exact = energy_statistic_exact(xs, ys);
  const ProjectedEnergy projected(pooled, 512);
  EXPECT_NEAR(projected.statistic(labels), exact, 1e-4 * exact + 1e-6);
  EXPECT_GT(exact, 0.0);
}

TEST(Energy, ExactStatisticOfIdenticalSamplesIsZero) {
  const auto xs = points(60, 13);
  EXPECT_NEAR(energy_statistic_exact(xs, xs), 0.0, 1e-12);
}

TEST(Energy, PermutationTestPowerAndSize) {
  EnergyTestOptions options;
  options.n_perm = 300;
  RngStream rng(90, 1);
  const auto same = energy_distance_test(points(1500, 14, 0.6), points(1500, 15, 0.6), rng, options);
  EXPECT_TRUE(same.pass);
  EXPECT_GT(same.p_value, 0.01);
  // Same marginals, different dependence: only a joint test sees this.
  const auto dep = energy_distance_test(points(1500, 16, 0.6), points(1500, 17, -0.6), rng, options);
  EXPECT_FALSE(dep.pass);
  EXPECT_NEAR(dep.p_value, 1.0 / 301.0, 1e-12);
}

TEST(Energy, RejectsBadInput) {
  RngStream rng(1, 1);
  EXPECT_THROW(energy_distance_test(points(10, 1), points(100, 2), rng), DomainError);
  EnergyTestOptions few;
  few.n_perm = 50;
  EXPECT_THROW(energy_distance_test(points(100, 1), points(100, 2), rng, few), DomainError);
  const std::vector<Point2> flat(100, Point2{1.0, 1.0});
  EXPECT_THROW(energy_distance_test(flat, flat, rng), DomainError);
}

TEST(ArctanTransform, Bounded) {
  const auto p = arctan_transform({1e300, -1.0});
  EXPECT_NEAR(p.x, std::numbers::pi / 2.0, 1e-15);
  EXPECT_NEAR(p.y, -std::numbers::pi / 4.0, 1e-15);
}
