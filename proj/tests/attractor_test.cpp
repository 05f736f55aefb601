#include <shadowlab/attractor.hpp>
#include <shadowlab/rng.hpp>

#include <gtest/gtest.h>

#include <sstream>

using namespace shadowlab;

TEST(AttractorSample, CountAndDeterminism)
{
    AttractorSampleSpec spec{Vec3(1, 1, 1), 10, 50, 2001};
    auto a = sample_attractor(lorenz(), spec);
    auto b = sample_attractor(lorenz(), spec);
    ASSERT_EQ(a.points.size(), 2001u);
    EXPECT_EQ(a.points, b.points);
    EXPECT_EQ(a.field_name, "lorenz");
    // Points are X_t at equally spaced times after the transient.
    Vec3 start = integrate(lorenz(), Vec3(1, 1, 1), 10).end_state();
    EXPECT_LT(distance(a.points.front(), start), 1e-12);
    Vec3 later = integrate(lorenz(), start, 0.025 * 100).end_state();
    EXPECT_LT(distance(a.points[100], later), 1e-6);
}

TEST(AttractorSample, BadSpecIsConfigError)
{
    EXPECT_THROW(sample_attractor(lorenz(), {Vec3(1, 1, 1), 10, 0, 10}), ConfigError);
    EXPECT_THROW(sample_attractor(lorenz(), {Vec3(1, 1, 1), 10, 5, 1}), ConfigError);
}

TEST(PointCloudFile, RoundTripIsBitExact)
{
    auto cloud = sample_attractor(lorenz(), {Vec3(1, 1, 1), 1, 5, 777});
    std::stringstream ss;
    write_point_cloud(ss, cloud);
    auto back = read_point_cloud(ss);
    EXPECT_EQ(back.field_name, cloud.field_name);
    EXPECT_EQ(back.field_params, cloud.field_params);
    EXPECT_EQ(back.points, cloud.points);
}

TEST(PointCloudFile, HeaderLayout)
{
    PointCloud c{"saddle", {2, 3, 1}, {Vec3(1, 2, 3)}};
    std::stringstream ss;
    write_point_cloud(ss, c);
    std::string s = ss.str();
    ASSERT_EQ(s.size(), 4u + 4 + 4 + 6 + 4 + 3 * 8 + 8 + 3 * 8);
    EXPECT_EQ(s.substr(0, 4), "SLPC");
    EXPECT_EQ(s.substr(12, 6), "saddle");
}

TEST(PointCloudFile, GarbageIsConfigError)
{
    std::stringstream bad("XXXXabcdef");
    EXPECT_THROW(read_point_cloud(bad), ConfigError);
    PointCloud c{"lorenz", {}, {Vec3(1, 2, 3), Vec3(4, 5, 6)}};
    std::stringstream ss;
    write_point_cloud(ss, c);
    std::string s = ss.str();
    std::stringstream cut(s.substr(0, s.size() - 5));
    EXPECT_THROW(read_point_cloud(cut), ConfigError);
}

TEST(GridIndex, BallMatchesBruteForce)
{
    CounterRng rng(3);
    std::vector<Vec3> pts;
    for (int i = 0; i < 3000; ++i) pts.push_back(rng.in_ball(5.0));
    GridIndex idx(pts, 0.7);
    for (int q = 0; q < 100; ++q) {
        Vec3 x = rng.in_ball(6.0);
        double r = rng.uniform(0.05, 2.0);
        std::vector<std::size_t> brute;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if ((pts[i] - x).norm() <= r) brute.push_back(i);
        EXPECT_EQ(idx.ball(x, r), brute);
        double best = kInf;
        for (const auto& p : pts) best = std::min(best, distance(p, x));
        double nd = idx.nearest_distance(x, 10.0);
        EXPECT_DOUBLE_EQ(nd, best);
    }
}

TEST(AttractorSample, MembershipUsesResolutionFloor)
{
    AttractorSample s(PointCloud{"lorenz", {}, {Vec3(0, 0, 0), Vec3(1, 0, 0)}});
    EXPECT_TRUE(s.contains(Vec3(1, 0, 5e-4)));
    EXPECT_FALSE(s.contains(Vec3(0.5, 0, 0)));
    EXPECT_TRUE(s.contains(Vec3(0.5, 0, 0), 0.6));
}
