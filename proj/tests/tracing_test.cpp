#include <shadowlab/tracing.hpp>

#include <gtest/gtest.h>

using namespace shadowlab;

namespace {

VectorField drift(const Vec3& v)
{
    VectorField f;
    f.name = "drift";
    f.eval = [v](const Vec3&) { return v; };
    f.jacobian = [](const Vec3&) { return Mat3::Zero().eval(); };
    return f;
}

FiniteChain lorenz_orbit_chain()
{
    return build_perturbed_chain(lorenz(), Vec3(1, 1, 20), {1.0, 1.0, 1.0}, 0.0, 7);
}

FiniteChain saddle_chain(double delta, std::uint64_t seed = 11)
{
    return build_perturbed_chain(saddle(), Vec3(1, 1, 1e-4), std::vector<double>(10, 1.0),
                                 delta / 2.0, seed);
}

} // namespace

TEST(Trace, ZeroDefectChainTracedByItsStart)
{
    auto c = lorenz_orbit_chain();
    auto v = verify_trace(c, 0.1, TraceClass::weak, {c.points().front()});
    EXPECT_TRUE(v.traced);
    EXPECT_TRUE(v.exact);
    EXPECT_LE(v.achieved_error, 10.0 * validate_chain(c).margin + 1e-9);
    EXPECT_EQ(v.best_z, c.points().front());
    // Identity up to the grid.
    for (double t : {0.5, 1.5, 2.5}) EXPECT_NEAR(v.best_g(t), t, 0.1);
}

TEST(Trace, RigidOffsetGivesItsLength)
{
    FiniteChain c(drift(Vec3(1, 0, 0)), {Vec3::Zero()}, {2.0}, 0.0, 1.0);
    Vec3 off(0.0, 0.03, 0.04);
    auto v = verify_trace(c, 0.2, TraceClass::weak, {off});
    EXPECT_TRUE(v.traced);
    EXPECT_NEAR(v.achieved_error, 0.05, v.modulus + 1e-12);
    EXPECT_GE(v.achieved_error, 0.05 - 1e-12);
}

TEST(Trace, StrongWithZeroToleranceIsPointwise)
{
    auto c = lorenz_orbit_chain();
    Vec3 z = c.points().front() + Vec3(1e-4, -2e-4, 5e-5);
    TraceOptions opt;
    opt.eps_rep = 0.0;
    auto v = verify_trace(c, 0.5, TraceClass::strong, {z}, opt);
    ChainGrid cg = chain_grid(c, 0.05);
    auto tr = integrate(c.field(), z, c.total_duration());
    double expect = 0.0;
    for (std::size_t a = 0; a < cg.tau.size(); ++a)
        expect = std::max(expect, distance(cg.points[a], tr.at(cg.tau[a])));
    EXPECT_NEAR(v.achieved_error, expect, 1e-12);
}

TEST(Trace, CoarseChordIsRejected)
{
    auto c = lorenz_orbit_chain();
    TraceOptions opt;
    opt.grid.chord = 0.1;
    EXPECT_THROW(verify_trace(c, 0.1, TraceClass::weak, {c.points().front()}, opt), RefineGridError);
}

TEST(Trace, NonPositiveEpsIsADomainError)
{
    auto c = lorenz_orbit_chain();
    EXPECT_THROW(verify_trace(c, 0.0, TraceClass::weak, {c.points().front()}), DomainError);
    EXPECT_THROW(verify_trace(c, 0.1, TraceClass::weak, {}), DomainError);
}

TEST(Trace, SaddleChainTracedWithCertificate)
{
    auto c = saddle_chain(1e-3);
    ASSERT_TRUE(validate_chain(c).pass());
    TraceOptions opt;
    opt.refine_rounds = 60;
    auto v = verify_trace(c, 0.05, TraceClass::weak, {c.points().front()}, opt);
    EXPECT_TRUE(v.traced) << v.achieved_error;
    auto check = recheck_certificate(c, v);
    EXPECT_TRUE(check.pass) << check.max_distance << " > " << check.bound;
    EXPECT_EQ(v.refine_rounds, 60);
}

TEST(Trace, ErrorIsMonotoneInEps)
{
    auto c = saddle_chain(1e-3);
    std::vector<Vec3> zs{c.points().front(), c.points().front() + Vec3(0, 0, -2e-5),
                         c.points().front() + Vec3(0.01, 0, 0)};
    bool prev = false;
    for (double eps : {0.01, 0.02, 0.05, 0.1, 0.2}) {
        auto v = verify_trace(c, eps, TraceClass::weak, zs);
        if (prev) EXPECT_TRUE(v.traced) << eps;
        prev = prev || v.traced;
    }
    EXPECT_TRUE(prev);
}

TEST(Trace, JsonRoundTripKeepsTheCertificate)
{
    auto c = lorenz_orbit_chain();
    auto v = verify_trace(c, 0.1, TraceClass::weak, {c.points().front()});
    auto back = verdict_from_json(nlohmann::json::parse(to_json(v).dump()));
    EXPECT_EQ(back.traced, v.traced);
    EXPECT_EQ(back.achieved_error, v.achieved_error);
    EXPECT_EQ(back.best_z, v.best_z);
    EXPECT_EQ(back.cap, v.cap);
    EXPECT_EQ(back.best_g.breakpoints(), v.best_g.breakpoints());
    EXPECT_TRUE(recheck_certificate(c, back).pass);
}

TEST(Trace, CapRejectsFarCandidatesAsLowerBounds)
{
    auto c = lorenz_orbit_chain();
    TraceOptions opt;
    opt.cap = 0.5;
    auto v = verify_trace(c, 0.1, TraceClass::weak, {c.points().front() + Vec3(1, 0, 0)}, opt);
    EXPECT_FALSE(v.traced);
    EXPECT_FALSE(v.exact);
    EXPECT_GE(v.achieved_error, 0.5);
}

TEST(Trace, ImplicationAuditIsMonotone)
{
    auto c = build_perturbed_chain(saddle(), Vec3(1, 1, 0.01), std::vector<double>(10, 0.5), 5e-3, 3);
    CounterRng rng(5);
    std::vector<Vec3> zs;
    for (int i = 0; i < 20; ++i) zs.push_back(c.points().front() + rng.in_ball(i < 10 ? 1e-3 : 0.05));
    TraceOptions opt;
    opt.eps_rep = 0.2;
    for (const auto& r : implication_audit(c, 0.2, zs, opt)) EXPECT_TRUE(r.monotone());
}

TEST(Trace, TiesGoToTheSmallestCandidate)
{
    FiniteChain c(drift(Vec3(1, 0, 0)), {Vec3::Zero()}, {2.0}, 0.0, 1.0);
    // Both at the same distance from the line.
    Vec3 a(0, 0.03, 0), b(0, -0.03, 0);
    auto v1 = verify_trace(c, 0.1, TraceClass::weak, {a, b});
    auto v2 = verify_trace(c, 0.1, TraceClass::weak, {b, a});
    EXPECT_EQ(v1.best_z, b);
    EXPECT_EQ(v2.best_z, b);
}

TEST(Trace, WorkersDoNotChangeTheVerdict)
{
    auto c = saddle_chain(1e-3);
    TraceOptions opt;
    opt.refine_rounds = 10;
    opt.workers = 1;
    auto v1 = verify_trace(c, 0.05, TraceClass::weak, {c.points().front()}, opt);
    opt.workers = 3;
    auto v3 = verify_trace(c, 0.05, TraceClass::weak, {c.points().front()}, opt);
    EXPECT_EQ(v1.best_z, v3.best_z);
    EXPECT_EQ(v1.achieved_error, v3.achieved_error);
    EXPECT_EQ(v1.candidate_count, v3.candidate_count);
}
