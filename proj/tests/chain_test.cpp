#include <shadowlab/chain.hpp>

#include <gtest/gtest.h>

#include <sstream>

using namespace shadowlab;

namespace {

FiniteChain true_orbit_chain(const VectorField& f, Vec3 x, const std::vector<double>& durations,
                             double delta)
{
    std::vector<Vec3> pts;
    for (double t : durations) {
        pts.push_back(x);
        x = integrate(f, x, t).end_state();
    }
    double T = *std::min_element(durations.begin(), durations.end());
    return FiniteChain(f, pts, durations, delta, T);
}

} // namespace

TEST(ChainClock, PartialSums)
{
    ChainClock c({2, 3, 4});
    EXPECT_EQ(c.sums(), (std::vector<double>{0, 2, 5, 9}));
    EXPECT_EQ(c.segment_of(0.0), 0u);
    EXPECT_EQ(c.segment_of(2.0), 1u);
    EXPECT_EQ(c.segment_of(9.0), 2u);
    EXPECT_THROW(c.segment_of(9.5), DomainError);
}

TEST(ChainEval, JunctionReturnsNextPoint)
{
    auto f = lorenz();
    FiniteChain ch(f, {Vec3(1, 1, 1), Vec3(2, 3, 4), Vec3(-1, 0, 20)}, {2, 3, 4}, 100.0, 2.0);
    EXPECT_EQ(chain_eval(ch, 2.0), Vec3(2, 3, 4));
    EXPECT_EQ(chain_eval(ch, 5.0), Vec3(-1, 0, 20));
    EXPECT_EQ(chain_eval(ch, 0.0), Vec3(1, 1, 1));
    EXPECT_EQ(chain_eval(ch, 9.0), ch.segment(2).end_state());
    EXPECT_THROW(chain_eval(ch, 9.01), DomainError);
    EXPECT_THROW(chain_eval(ch, -0.01), DomainError);
}

TEST(ChainEval, SingleSegmentIsTheFlow)
{
    auto f = lorenz();
    FiniteChain ch(f, {Vec3(1, 1, 1)}, {3.0}, 0.0, 3.0);
    auto tr = integrate(f, Vec3(1, 1, 1), 3.0);
    for (double t : {0.0, 0.4, 1.9, 3.0}) EXPECT_EQ(chain_eval(ch, t), flow_at(tr, t));
}

TEST(ValidateChain, ZeroDefectTrueOrbit)
{
    auto ch = true_orbit_chain(lorenz(), Vec3(1, 1, 1), {1, 1.5, 2}, 0.0);
    auto v = validate_chain(ch);
    ASSERT_EQ(v.defects.size(), 2u);
    for (double d : v.defects) EXPECT_LE(d, 10 * FlowOptions{}.tol.target(30.0));
    EXPECT_TRUE(v.pass());
}

TEST(ValidateChain, DisplacedJunctionFails)
{
    auto f = saddle();
    double delta = 1e-3;
    auto ok = true_orbit_chain(f, Vec3(0.5, 0.5, 0.01), {1, 1, 1}, delta);
    auto pts = ok.points();
    pts[2] += Vec3(2 * delta, 0, 0);
    FiniteChain bad(f, pts, ok.durations(), delta, 1.0);
    auto v = validate_chain(bad);
    EXPECT_FALSE(v.pass());
    EXPECT_EQ(v.failing, (std::vector<std::size_t>{1}));
    EXPECT_NEAR(v.defects[1], 2 * delta, 1e-9);
}

TEST(ValidateChain, JumpsEqualDefects)
{
    auto f = lorenz();
    auto ch = build_perturbed_chain(f, Vec3(1, 1, 1), {1, 1, 1, 1}, 1e-2, 9);
    auto v = validate_chain(ch);
    for (std::size_t i = 1; i < ch.size(); ++i) {
        double jump = distance(ch.left_limit(i), chain_eval(ch, ch.clock().S(i)));
        EXPECT_EQ(jump, v.defects[i - 1]);
    }
}

TEST(FiniteChain, DurationBelowTRejected)
{
    EXPECT_THROW(FiniteChain(lorenz(), {Vec3(1, 1, 1), Vec3(1, 2, 3)}, {1.0, 0.5}, 0.1, 1.0),
                 DomainError);
}

TEST(PerturbedChain, ZeroNoise)
{
    auto ch = build_perturbed_chain(saddle(), Vec3(1, 1, 0.01), {1, 1, 1}, 0.0, 1);
    auto v = validate_chain(ch);
    EXPECT_TRUE(v.pass());
    for (double d : v.defects) EXPECT_LE(d, 10 * FlowOptions{}.tol.target(2.0));
}

TEST(PerturbedChain, SaddleTenSegments)
{
    std::vector<double> durations(10, 1.0);
    auto ch = build_perturbed_chain(saddle(2, 3, 1), Vec3(1, 1, 1e-4), durations, 1e-3, 42);
    EXPECT_EQ(ch.delta(), 2e-3);
    EXPECT_EQ(ch.T(), 1.0);
    EXPECT_EQ(ch.size(), 10u);
    EXPECT_TRUE(validate_chain(ch).pass());
}

TEST(PerturbedChain, DeterministicForSeed)
{
    auto a = build_perturbed_chain(lorenz(), Vec3(1, 1, 1), {1, 1, 1}, 1e-3, 77);
    auto b = build_perturbed_chain(lorenz(), Vec3(1, 1, 1), {1, 1, 1}, 1e-3, 77);
    auto c = build_perturbed_chain(lorenz(), Vec3(1, 1, 1), {1, 1, 1}, 1e-3, 78);
    EXPECT_EQ(a.points(), b.points());
    EXPECT_NE(a.points(), c.points());
}

TEST(ChainFile, BitExactRoundTrip)
{
    auto ch = build_perturbed_chain(lorenz(), Vec3(1.1, 1.0 / 3.0, 1e-7), {1.25, 0.1 + 0.2, 2},
                                    1e-3, 5);
    std::stringstream ss;
    write_chain(ss, ch);
    auto back = read_chain(ss);
    EXPECT_EQ(back.points(), ch.points());
    EXPECT_EQ(back.durations(), ch.durations());
    EXPECT_EQ(back.delta(), ch.delta());
    EXPECT_EQ(back.T(), ch.T());
    EXPECT_EQ(back.metadata().seed, 5u);
    EXPECT_EQ(back.field().name, "lorenz");
    EXPECT_EQ(back.field().params, ch.field().params);
    std::stringstream again;
    write_chain(again, back);
    std::stringstream first;
    write_chain(first, ch);
    EXPECT_EQ(again.str(), first.str());
}

TEST(ChainFile, MalformedInput)
{
    std::stringstream ss("field lorenz\nsegments 2\n1 2 3 1\n");
    EXPECT_THROW(read_chain(ss), ConfigError);
    std::stringstream bad("field lorenz\nbogus 1\n");
    EXPECT_THROW(read_chain(bad), ConfigError);
}
