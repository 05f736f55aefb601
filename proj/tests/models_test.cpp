#include <shadowlab/models.hpp>
#include <shadowlab/rng.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>

using namespace shadowlab;

TEST(MakeModel, LorenzSingularities)
{
    auto f = make_model("lorenz", {10, 28, 8.0 / 3.0});
    ASSERT_EQ(f.singularities.size(), 3u);
    double c = std::sqrt(8.0 / 3.0 * 27.0);
    EXPECT_EQ(f.singularities[0], Vec3::Zero());
    EXPECT_NEAR(f.singularities[1][0], c, 1e-14);
    EXPECT_NEAR(f.singularities[2][1], -c, 1e-14);
    for (const auto& q : f.singularities) EXPECT_LE(f(q).norm(), 1e-12);
}

TEST(MakeModel, JacobianAudit)
{
    CounterRng rng(3);
    for (const auto& f : {lorenz(), saddle(), limit_cycle(), linear_diagonal(-1, 2, 0.5)}) {
        auto audit = audit_field(f, rng, 100);
        EXPECT_LE(audit.max_relative_error, 1e-6) << f.name;
        EXPECT_LE(audit.max_singularity_residual, 1e-12) << f.name;
    }
}

TEST(MakeModel, Errors)
{
    EXPECT_THROW(make_model("duffing"), ConfigError);
    EXPECT_THROW(make_model("lorenz", {1, 2}), ConfigError);
    EXPECT_THROW(make_model("saddle", {-1, 2, 3}), ConfigError);
    EXPECT_THROW(make_model("limit_cycle", {0}), ConfigError);
}

TEST(Saddle, ClosedFormFlow)
{
    auto tr = integrate(saddle(2, 3, 1), Vec3(1, 1, 1), 1.0);
    Vec3 exact(std::exp(-2.0), std::exp(-3.0), std::exp(1.0));
    EXPECT_LE(distance(tr.end_state(), exact), 10 * FlowOptions{}.tol.target(exact.norm()));
}

TEST(LimitCycle, CycleReturnsAfterTwoPi)
{
    auto f = limit_cycle(1.0);
    auto tr = integrate(f, Vec3(1, 0, 0), 2 * std::numbers::pi);
    EXPECT_LE(distance(tr.end_state(), Vec3(1, 0, 0)), 1e-8);
    for (const auto& x : tr.node_states()) {
        EXPECT_NEAR(std::hypot(x[0], x[1]), 1.0, 1e-9);
        EXPECT_EQ(x[2], 0.0);
    }
}

TEST(LimitCycle, ClosedFormFlow)
{
    auto f = limit_cycle(1.5);
    Vec3 x0(0.3, -0.2, 0.7);
    auto tr = integrate(f, x0, 3.0);
    for (double t : {0.4, 1.7, 3.0}) {
        Vec3 exact = limit_cycle_flow(1.5, x0, t);
        EXPECT_LE(distance(flow_at(tr, t), exact), 1e-8);
    }
}

TEST(LorenzOrigin, LorenzLikeOrdering)
{
    auto f = lorenz();
    auto s = lorenz_like_saddle(f, Vec3::Zero());
    EXPECT_GT(s.unstable_rate, 0.0);
    EXPECT_NEAR(s.weak_rate, -8.0 / 3.0, 1e-12);
    EXPECT_LT(s.strong_rate, s.weak_rate);
    EXPECT_GT(s.unstable_rate, -s.weak_rate);
    EXPECT_NEAR(std::abs(s.weak_stable[2]), 1.0, 1e-12);
    // Unstable direction transverse to the stable plane.
    Vec3 n = s.weak_stable.cross(s.strong_stable).normalized();
    double angle = 90.0 - line_angle_deg(s.unstable, n);
    EXPECT_GE(angle, 10.0);
}

TEST(LorenzOrigin, SaddleIsNotLorenzLike)
{
    // Stable rates -2, -3 with unstable 1 < 2: fails the ordering.
    EXPECT_THROW(lorenz_like_saddle(saddle(2, 3, 1), Vec3::Zero()), GeometryError);
}

TEST(Lorenz, BoundedAttractorBox)
{
    auto tr = integrate(lorenz(), Vec3(1, 1, 1), 200.0);
    for (std::size_t i = 0; i < tr.node_times().size(); ++i) {
        if (tr.node_times()[i] < 10.0) continue;
        const Vec3& x = tr.node_states()[i];
        EXPECT_LE(std::abs(x[0]), 30.0);
        EXPECT_LE(std::abs(x[1]), 30.0);
        EXPECT_GE(x[2], 0.0);
        EXPECT_LE(x[2], 60.0);
    }
}

TEST(Oracle, ExpansionOnGrid)
{
    LorenzMapOracle f;
    int n = 10000;
    for (int i = 0; i <= n; ++i) {
        double x = -1.0 + 2.0 * i / n;
        if (x == 0.0) continue;
        EXPECT_GE(std::abs(f.derivative(x)), std::sqrt(2.0)) << x;
    }
}

TEST(Oracle, BoundaryNormalization)
{
    LorenzMapOracle f;
    EXPECT_EQ(f.limit_at_zero(-1), 1.0);
    EXPECT_EQ(f.limit_at_zero(+1), -1.0);
    EXPECT_NEAR(f(1e-12), -1.0, 1e-8);
    EXPECT_NEAR(f(-1e-12), 1.0, 1e-8);
    auto it = oracle_iterate(f, 1e-13, 1);
    EXPECT_NEAR(it.values[0], -1.0, 1e-9);
}

TEST(Oracle, FixedPointHasConstantItinerary)
{
    LorenzMapOracle f;
    // Solve f(x) = x on the positive branch by bisection.
    double lo = 1e-9, hi = 1.0;
    auto g = [&](double x) { return f(x) - x; };
    ASSERT_LE(g(lo) * g(hi), 0.0);
    for (int k = 0; k < 200; ++k) {
        double mid = 0.5 * (lo + hi);
        (g(lo) * g(mid) <= 0.0 ? hi : lo) = mid;
    }
    auto it = oracle_iterate(f, hi, 30);
    EXPECT_FALSE(it.boundary);
    for (int s : it.symbols) EXPECT_EQ(s, 1);
}

TEST(Oracle, BoundaryItineraryFlag)
{
    LorenzMapOracle f;
    auto it = oracle_iterate(f, 0.0, 5);
    EXPECT_TRUE(it.boundary);
    EXPECT_EQ(it.boundary_index, 0);
    EXPECT_THROW(oracle_iterate(f, 1.5, 3), DomainError);
}

TEST(Oracle, ExpansionOnSharedItineraries)
{
    LorenzMapOracle f;
    CounterRng rng(5);
    int checked = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        double x = rng.uniform(-1, 1);
        double y = x + rng.uniform(-1e-7, 1e-7);
        if (y < -1 || y > 1) continue;
        auto a = oracle_iterate(f, x, 20);
        auto b = oracle_iterate(f, y, 20);
        double d0 = std::abs(x - y);
        for (std::size_t n = 0; n < a.values.size() && n < b.values.size(); ++n) {
            if (a.symbols[n] != b.symbols[n]) break;
            double bound = std::pow(std::sqrt(2.0), double(n + 1)) * d0;
            EXPECT_GE(std::abs(a.values[n] - b.values[n]), bound * (1 - 1e-9));
            ++checked;
        }
    }
    EXPECT_GT(checked, 1000);
}

TEST(Oracle, SymbolicShadowingBound)
{
    // Brute force on a subdivision: points sharing a length-n itinerary lie in
    // one cylinder, whose diameter is at most C (sqrt 2)^-n with C = 2.
    LorenzMapOracle f;
    const int grid = 200000;
    for (int n : {4, 8, 12}) {
        std::map<std::vector<int>, std::pair<double, double>> cyl;
        for (int i = 0; i <= grid; ++i) {
            double x = -1.0 + 2.0 * i / grid;
            auto it = oracle_iterate(f, x, n);
            if (it.boundary) continue;
            auto [pos, fresh] = cyl.try_emplace(it.symbols, x, x);
            pos->second.first = std::min(pos->second.first, x);
            pos->second.second = std::max(pos->second.second, x);
        }
        double bound = 2.0 * std::pow(std::sqrt(2.0), -n);
        for (const auto& [sym, span] : cyl) EXPECT_LE(span.second - span.first, bound);
    }
}
