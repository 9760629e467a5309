#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "gmmdeploy/divergence.hpp"
#include "oracles.hpp"

namespace gmmdeploy {
namespace {

constexpr double kPi = std::numbers::pi;

Mat2 mat(double a, double b, double c, double d) {
  Mat2 m;
  m << a, b, c, d;
  return m;
}

ServiceProfile profile(double sx, double sy, double omega) {
  ServiceProfile p;
  p.scale = 1.0;
  p.rel_weight = omega;
  p.sigma_x = sx;
  p.sigma_y = sy;
  return p;
}

Mat2 random_spd(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> var(0.2, 5.0);
  std::uniform_real_distribution<double> ang(0.0, kPi);
  double a = var(rng), b = var(rng);
  if (a < b) std::swap(a, b);
  return cov_from_axes(AxisForm<double>{a, b, ang(rng)});
}

TEST(KldGaussian, Examples) {
  const Mat2 s = mat(2.0, 0.3, 0.3, 1.0);
  EXPECT_NEAR(kld_gaussian<double>(Vec2(1, 2), s, Vec2(1, 2), s), 0.0, 1e-15);
  EXPECT_NEAR(kld_gaussian<double>(Vec2::Zero(), Mat2::Identity(), Vec2(1, 0), Mat2::Identity()), 0.5, 1e-15);
  EXPECT_THROW(kld_gaussian<double>(Vec2::Zero(), Mat2::Identity(), Vec2::Zero(), mat(1, 1, 1, 1)),
               NumericalError);
}

TEST(KldGaussian, MatchesMonteCarlo) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> shift(0.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    const Vec2 mu0(shift(rng), shift(rng));
    const Vec2 mu1(shift(rng), shift(rng));
    const Mat2 s0 = random_spd(rng);
    const Mat2 s1 = random_spd(rng);
    const double closed = kld_gaussian(mu0, s0, mu1, s1);
    const auto mc = oracle::mc_gaussian_kld(mu0, s0, mu1, s1, 1000000, rng);
    EXPECT_NEAR(closed, mc.mean, 3 * mc.std_error) << trial;
    EXPECT_NEAR(closed, mc.mean, 0.01 * closed + 1e-3) << trial;
  }
}

TEST(KldGaussian, WorksForOtherScalars) {
  const Vector2<long double> m0(0, 0), m1(1, 0);
  const Matrix2<long double> id = Matrix2<long double>::Identity();
  EXPECT_NEAR(static_cast<double>(kld_gaussian(m0, id, m1, id)), 0.5, 1e-18);
  const Vector2<float> f0(0, 0), f1(1, 0);
  EXPECT_NEAR(kld_gaussian(f0, Matrix2<float>::Identity().eval(), f1, Matrix2<float>::Identity().eval()),
              0.5f, 1e-6f);
}

TEST(CovFromAxes, Examples) {
  EXPECT_TRUE(cov_from_axes(AxisForm<double>{4, 1, 0}).isApprox(mat(4, 0, 0, 1), 1e-15));
  EXPECT_NEAR((cov_from_axes(AxisForm<double>{4, 1, kPi / 2}) - mat(1, 0, 0, 4)).norm(), 0.0, 1e-14);
  EXPECT_NEAR((cov_from_axes(AxisForm<double>{4, 1, kPi / 4}) - mat(2.5, 1.5, 1.5, 2.5)).norm(), 0.0, 1e-14);
}

TEST(AxesFromCov, Examples) {
  const auto a = axes_from_cov(mat(4, 0, 0, 1));
  EXPECT_DOUBLE_EQ(a.sigma_major, 4.0);
  EXPECT_DOUBLE_EQ(a.sigma_minor, 1.0);
  EXPECT_DOUBLE_EQ(a.theta, 0.0);

  const auto iso = axes_from_cov(mat(3, 0, 0, 3));
  EXPECT_DOUBLE_EQ(iso.sigma_major, 3.0);
  EXPECT_DOUBLE_EQ(iso.sigma_minor, 3.0);
  EXPECT_DOUBLE_EQ(iso.theta, 0.0);

  const auto rt = axes_from_cov(cov_from_axes(AxisForm<double>{7, 2, 1.1}));
  EXPECT_NEAR(rt.sigma_major, 7.0, 1e-10);
  EXPECT_NEAR(rt.sigma_minor, 2.0, 1e-10);
  EXPECT_NEAR(rt.theta, 1.1, 1e-10);

  const auto vertical = axes_from_cov(mat(1, 0, 0, 4));
  EXPECT_NEAR(vertical.theta, kPi / 2, 1e-15);
}

TEST(AxesFromCov, RejectsBadMatrices) {
  EXPECT_THROW(axes_from_cov(mat(2, 0.5, 0.4, 1)), std::invalid_argument);
  EXPECT_THROW(axes_from_cov(mat(1, 2, 2, 1)), std::invalid_argument);
}

TEST(AxesFromCov, RoundTripProperty) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> var(0.01, 100.0);
  std::uniform_real_distribution<double> ang(0.0, kPi);
  for (int trial = 0; trial < 1000; ++trial) {
    double a = var(rng), b = var(rng);
    if (a < b) std::swap(a, b);
    if (a - b < 1e-3) continue;
    const double t = ang(rng);
    const auto back = axes_from_cov(cov_from_axes(AxisForm<double>{a, b, t}));
    EXPECT_NEAR(back.sigma_major, a, 1e-10 * a);
    EXPECT_NEAR(back.sigma_minor, b, 1e-10 * a);
    const double dt = std::remainder(back.theta - t, kPi);
    EXPECT_NEAR(dt, 0.0, 1e-8) << a << " " << b << " " << t;
    EXPECT_GE(back.theta, 0.0);
    EXPECT_LT(back.theta, kPi);
  }
}

TEST(Pose, HeadingIsNormalized) {
  EXPECT_NEAR(Pose(Vec2::Zero(), -kPi / 2).heading, 1.5 * kPi, 1e-15);
  EXPECT_NEAR(Pose(Vec2::Zero(), 5 * kPi).heading, kPi, 1e-14);
  EXPECT_DOUBLE_EQ(Pose(Vec2::Zero(), 0.0).heading, 0.0);
}

TEST(ServiceProfile, Validation) {
  EXPECT_THROW(profile(1.0, 2.0, 0.5).validate(), std::invalid_argument);
  EXPECT_THROW(profile(2.0, 0.0, 0.5).validate(), std::invalid_argument);
  EXPECT_THROW(profile(2.0, 1.0, 0.0).validate(), std::invalid_argument);
  EXPECT_THROW(profile(2.0, 1.0, 1.5).validate(), std::invalid_argument);
  EXPECT_NO_THROW(profile(2.0, 1.0, 1.0).validate());
}

TEST(CostAtPose, MatchedPairIsZero) {
  const GaussianComponent basis{0.2, Vec2(3, 4), cov_from_axes(AxisForm<double>{5, 2, 0.4})};
  EXPECT_NEAR(cost_at_pose(profile(5, 2, 0.2), Pose(Vec2(3, 4), 0.4), basis), 0.0, 1e-15);
}

TEST(CostAtPose, DisplacementStrictlyIncreasesCost) {
  const GaussianComponent basis{0.3, Vec2(0, 0), mat(3, 1, 1, 2)};
  const auto p = profile(4, 1, 0.2);
  const double at_mean = cost_at_pose(p, Pose(Vec2::Zero(), 0.7), basis);
  for (double d : {1e-3, 0.1, 1.0, 10.0}) {
    EXPECT_GT(cost_at_pose(p, Pose(Vec2(d, -d), 0.7), basis), at_mean) << d;
  }
}

TEST(CostAtPose, MatchesFirstPrinciplesComposition) {
  const GaussianComponent basis{0.35, Vec2(1, -2), mat(6, -1.5, -1.5, 2)};
  const auto p = profile(9, 3, 0.15);
  const Vec2 x(2.5, 0.5);
  const double h = 2.2;
  EXPECT_NEAR(cost_at_pose(p, Pose(x, h), basis),
              oracle::placement_cost(0.35, 0.15, basis.mean, basis.cov, 9, 3, x, h), 1e-12);
}

TEST(CostAtPose, CanBeNegative) {
  const GaussianComponent basis{0.1, Vec2(0, 0), mat(2, 0, 0, 1)};
  EXPECT_LT(cost_at_pose(profile(2, 1, 0.5), Pose(Vec2::Zero(), 0.0), basis), 0.0);
}

TEST(OptimalPose, ExactShapeMatch) {
  const GaussianComponent basis{0.3, Vec2(10, 20), mat(30, 0, 0, 30)};
  const auto best = optimal_pose(profile(30, 30, 0.3), basis);
  EXPECT_NEAR(best.cost, 0.0, 1e-15);
  EXPECT_EQ(best.pose.position, Vec2(10, 20));
  EXPECT_DOUBLE_EQ(best.pose.heading, 0.0);
}

TEST(OptimalPose, HandCase) {
  const GaussianComponent basis{1.0, Vec2(0, 0), mat(4, 0, 0, 1)};
  const auto best = optimal_pose(profile(1, 1, 1.0), basis);
  EXPECT_NEAR(best.cost, 0.5 * (std::log(0.25) + 5.0 - 2.0), 1e-15);
  EXPECT_NEAR(best.cost, 0.80685, 1e-5);
}

TEST(OptimalPose, ZeroWeightComponentCostsNothing) {
  const GaussianComponent basis{0.0, Vec2(1, 1), mat(4, 0, 0, 1)};
  const auto best = optimal_pose(profile(2, 1, 0.5), basis);
  EXPECT_EQ(best.cost, 0.0);
  EXPECT_EQ(best.pose.position, Vec2(1, 1));
}

TEST(OptimalPose, GridSearchNeverBeatsClosedForm) {
  const GaussianComponent basis{0.4, Vec2(5, -3), cov_from_axes(AxisForm<double>{9, 4, 0.6})};
  const auto p = profile(6, 2, 0.25);
  const auto best = optimal_pose(p, basis);
  const double sx = std::sqrt(basis.cov(0, 0));
  const double sy = std::sqrt(basis.cov(1, 1));
  double grid_min = std::numeric_limits<double>::infinity();
  for (int ix = -12; ix <= 12; ++ix) {
    for (int iy = -12; iy <= 12; ++iy) {
      const Vec2 x = basis.mean + Vec2(ix * sx / 4, iy * sy / 4);
      for (int deg = 0; deg < 180; ++deg) {
        const double c = oracle::placement_cost(0.4, 0.25, basis.mean, basis.cov, 6, 2, x, deg * kPi / 180);
        grid_min = std::min(grid_min, c);
        ASSERT_GE(c, best.cost - 1e-9);
      }
    }
  }
  EXPECT_NEAR(grid_min, best.cost, 1e-3);
}

TEST(DivergenceProperty, KldNonNegativeAndZeroOnlyWhenEqual) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int trial = 0; trial < 500; ++trial) {
    const Vec2 m0(n(rng), n(rng));
    const Mat2 s0 = random_spd(rng);
    const Vec2 m1(n(rng), n(rng));
    const Mat2 s1 = random_spd(rng);
    EXPECT_GT(kld_gaussian(m0, s0, m1, s1), 0.0);
    EXPECT_NEAR(kld_gaussian(m0, s0, m0, s0), 0.0, 1e-12);
  }
}

TEST(DivergenceProperty, HalfTurnInvariance) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const GaussianComponent basis{0.3, Vec2(u(rng), u(rng)), random_spd(rng)};
    const auto p = profile(4, 1.5, 0.2);
    const Vec2 x(u(rng), u(rng));
    const double h = u(rng);
    EXPECT_NEAR(cost_at_pose(p, Pose(x, h), basis), cost_at_pose(p, Pose(x, h + kPi), basis), 1e-10);
  }
}

TEST(DivergenceProperty, ClosedFormEqualsCostAtReturnedPose) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::uniform_real_distribution<double> w(0.01, 1.0);
  std::uniform_real_distribution<double> var(0.5, 80.0);
  for (int trial = 0; trial < 1000; ++trial) {
    double a = var(rng), b = var(rng);
    if (a < b) std::swap(a, b);
    const GaussianComponent basis{w(rng), Vec2(u(rng), u(rng)), random_spd(rng) * 10};
    const auto p = profile(a, b, w(rng));
    const auto best = optimal_pose(p, basis);
    EXPECT_NEAR(best.cost, cost_at_pose(p, best.pose, basis), 1e-12 * std::max(1.0, std::abs(best.cost)));
  }
}

TEST(DivergenceProperty, RandomPosesNeverUndercut) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  std::uniform_real_distribution<double> w(0.01, 1.0);
  std::uniform_real_distribution<double> var(0.5, 80.0);
  std::uniform_real_distribution<double> ang(0.0, 2 * kPi);
  std::normal_distribution<double> jitter(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    double a = var(rng), b = var(rng);
    if (a < b) std::swap(a, b);
    const GaussianComponent basis{w(rng), Vec2(u(rng), u(rng)), random_spd(rng) * 10};
    const auto p = profile(a, b, w(rng));
    const auto best = optimal_pose(p, basis);
    for (int s = 0; s < 1000; ++s) {
      const Vec2 x = basis.mean + std::sqrt(a) * Vec2(jitter(rng), jitter(rng)) * (s % 2 ? 0.01 : 1.0);
      ASSERT_GE(cost_at_pose(p, Pose(x, ang(rng)), basis), best.cost - 1e-9);
    }
  }
}

TEST(DivergenceProperty, IsotropicAgentIgnoresHeading) {
  const GaussianComponent basis{0.5, Vec2(1, 1), mat(5, 2, 2, 3)};
  const auto p = profile(2, 2, 0.3);
  const double ref = cost_at_pose(p, Pose(Vec2(2, 0), 0.0), basis);
  for (int i = 1; i < 360; ++i) {
    EXPECT_NEAR(cost_at_pose(p, Pose(Vec2(2, 0), i * kPi / 180), basis), ref, 1e-12);
  }
}

}  // namespace
}  // namespace gmmdeploy
