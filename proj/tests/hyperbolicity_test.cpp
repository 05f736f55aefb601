#include <shadowlab/hyperbolicity.hpp>
#include <shadowlab/models.hpp>
#include <shadowlab/rng.hpp>

#include <gtest/gtest.h>

using namespace shadowlab;

TEST(TwoNorm, UnitSquareDegenerateAndShear)
{
    EXPECT_DOUBLE_EQ(two_norm(Vec3::UnitX(), Vec3::UnitY()), 1.0);
    EXPECT_DOUBLE_EQ(two_norm(Vec3(1, 2, 3), Vec3(1, 2, 3)), 0.0);
    EXPECT_DOUBLE_EQ(two_norm(Vec3(1, 0, 0), Vec3(1, 1, 0)), 1.0);
}

TEST(TwoNorm, LagrangeIdentityOnRandomPairs)
{
    CounterRng rng(2024);
    for (int i = 0; i < 10000; ++i) {
        Vec3 u = rng.in_ball(10.0), v = rng.in_ball(10.0);
        double a = two_norm(u, v);
        double lhs = a * a + u.dot(v) * u.dot(v);
        double rhs = u.squaredNorm() * v.squaredNorm();
        ASSERT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, rhs)) << i;
        ASSERT_NEAR(a, u.cross(v).norm(), 1e-9 * std::max(1.0, u.norm() * v.norm())) << i;
    }
}

TEST(SectionalGrowth, SaddleGivenPlane)
{
    auto r = sectional_growth(saddle(2, 3, 1), Vec3(0.1, 0.1, 0.1), 2.0, {},
                              std::array<Vec3, 2>{Vec3::UnitX(), Vec3::UnitZ()});
    EXPECT_NEAR(r.area_rate, -1.0, 1e-8);
    EXPECT_NEAR(r.stable_rate, -3.0, 1e-8);
    EXPECT_NEAR(r.log_rates[0], 1.0, 1e-8);
    EXPECT_NEAR(r.log_rates[1], -2.0, 1e-8);
    EXPECT_NEAR(r.log_rates[2], -3.0, 1e-8);
}

TEST(SectionalGrowth, PlaneAlongTheFlowOnTheAxisIsDegenerate)
{
    // On the unstable axis the flow is parallel to e3.
    Vec3 x(0, 0, 0.1);
    auto f = saddle(2, 3, 1);
    EXPECT_THROW(sectional_growth(f, x, 1.0, {}, std::array<Vec3, 2>{Vec3::UnitZ(), f(x)}), DomainError);
}

TEST(SectionalGrowth, DiagonalRatesAdd)
{
    auto r = sectional_growth(linear_diagonal(1, 3, -1), Vec3(0.1, 0.1, 0.1), 2.0, {},
                              std::array<Vec3, 2>{Vec3::UnitX(), Vec3::UnitY()});
    EXPECT_NEAR(r.area_rate, 4.0, 1e-8);
}

TEST(SectionalGrowth, AreaIsTheTopTwoSingularRates)
{
    auto f = lorenz();
    Vec3 y = flow_map(f, Vec3(1, 1, 1), 100.0);
    for (int k = 0; k < 3; ++k) {
        y = flow_map(f, y, 5.0);
        auto r = sectional_growth(f, y, 30.0);
        double sum = r.log_rates[0] + r.log_rates[1];
        EXPECT_NEAR(r.area_rate, sum, 1e-6 * std::abs(sum));
        EXPECT_GE(r.log_rates[0], r.log_rates[1]);
        EXPECT_GE(r.log_rates[1], r.log_rates[2]);
    }
}

TEST(SectionalGrowth, InPlaneRemixingKeepsTheAreaRate)
{
    auto f = lorenz();
    Vec3 y = flow_map(f, Vec3(1, 1, 1), 100.0);
    Vec3 u = Vec3(1, 0.3, -0.2), w = Vec3(-0.4, 1, 0.5);
    auto r1 = sectional_growth(f, y, 10.0, {}, std::array<Vec3, 2>{u, w});
    // Determinant-one remix of (u, w).
    Vec3 u2 = 2.0 * u + 3.0 * w, w2 = 1.0 * u + 2.0 * w;
    auto r2 = sectional_growth(f, y, 10.0, {}, std::array<Vec3, 2>{u2, w2});
    EXPECT_NEAR(r1.area_rate, r2.area_rate, 1e-8 * std::abs(r1.area_rate));
}

TEST(SectionalGrowth, LorenzExpandsAreaWithDomination)
{
    auto f = lorenz();
    CounterRng rng(7);
    Vec3 y = flow_map(f, Vec3(1, 1, 1), 100.0);
    for (int k = 0; k < 10; ++k) {
        y = flow_map(f, y, 1.0 + 10.0 * rng.uniform());
        auto r = sectional_growth(f, y, 50.0);
        EXPECT_GT(r.area_rate, 0.0) << k;
        EXPECT_GT(r.domination_gap, 0.0) << k;
    }
}

TEST(Probe, SaddleRatesAreEigenvalues)
{
    auto r = hyperbolicity_probe(saddle(2, 3, 1), Vec3(0.5, 0.5, 0.01), 2.0, 0.001);
    EXPECT_NEAR(r.log_rates[0], 1.0, 1e-8);
    EXPECT_NEAR(r.log_rates[1], -2.0, 1e-8);
    EXPECT_NEAR(r.log_rates[2], -3.0, 1e-8);
}

TEST(Probe, LimitCycleHasOneZeroRate)
{
    for (double a : {1.0, 0.5}) {
        auto r = hyperbolicity_probe(limit_cycle(a), Vec3(1, 0, 0), 20.0, 0.5);
        std::array<double, 3> expect{0.0, -std::min(1.0, 2 * a), -std::max(1.0, 2 * a)};
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.log_rates[i], expect[i], 1e-6) << a;
        EXPECT_NEAR(r.flow_rate, 0.0, 1e-8);
    }
}

TEST(Probe, LorenzSegmentSignature)
{
    auto f = lorenz();
    Vec3 y = flow_map(f, Vec3(1, 1, 1), 100.0);
    double h = near_return_horizon(f, y, 20.0, 30.0);
    auto r = hyperbolicity_probe(f, y, h, 1.0);
    EXPECT_GT(r.log_rates[0], 0.1);
    EXPECT_LT(std::abs(r.log_rates[1]), 0.1);
    EXPECT_LT(r.log_rates[2], -0.1);
    EXPECT_LT(std::abs(r.flow_rate), 1e-2);
}

TEST(Probe, SegmentThroughTheBallIsRejected)
{
    EXPECT_THROW(hyperbolicity_probe(saddle(2, 3, 1), Vec3(0.5, 0.5, 0.01), 2.0, 0.5), DomainError);
}

TEST(Probe, RatesAreHorizonStable)
{
    auto check = [](const GrowthReport& a, const GrowthReport& b) {
        for (int i = 0; i < 3; ++i)
            EXPECT_LE(std::abs(a.log_rates[i] - b.log_rates[i]),
                      0.05 * std::max(std::abs(a.log_rates[i]), 0.02));
    };
    check(hyperbolicity_probe(saddle(2, 3, 1), Vec3(0.5, 0.5, 0.01), 1.0, 0.001),
          hyperbolicity_probe(saddle(2, 3, 1), Vec3(0.5, 0.5, 0.01), 2.0, 0.001));
    check(hyperbolicity_probe(limit_cycle(1), Vec3(1, 0, 0), 10.0, 0.5),
          hyperbolicity_probe(limit_cycle(1), Vec3(1, 0, 0), 20.0, 0.5));
}
