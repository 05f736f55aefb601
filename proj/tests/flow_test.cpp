#include <shadowlab/flow.hpp>
#include <shadowlab/models.hpp>
#include <shadowlab/rng.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace shadowlab;

namespace {

double tol_target(const Vec3& x) { return FlowOptions{}.tol.target(x.norm()); }

} // namespace

TEST(Integrate, LinearDecayEndpoint)
{
    auto f = linear_diagonal(-1, -1, -1);
    auto tr = integrate(f, Vec3(1, 0, 0), 1.0);
    Vec3 exact(std::exp(-1.0), 0, 0);
    EXPECT_LE(distance(tr.end_state(), exact), 10 * tol_target(exact));
}

TEST(Integrate, ZeroTimeSingleNode)
{
    auto tr = integrate(lorenz(), Vec3(1, 2, 3), 0.0);
    ASSERT_EQ(tr.node_times().size(), 1u);
    EXPECT_EQ(tr.node_times()[0], 0.0);
    EXPECT_EQ(tr.x0(), Vec3(1, 2, 3));
}

TEST(Integrate, LorenzHalfToleranceConsistency)
{
    FlowOptions opt;
    FlowOptions half = opt;
    half.tol = opt.tol.scaled(0.5);
    auto a = integrate(lorenz(), Vec3(1, 1, 1), 10.0, opt);
    auto b = integrate(lorenz(), Vec3(1, 1, 1), 10.0, half);
    EXPECT_LE(distance(a.end_state(), b.end_state()), 10 * opt.tol.target(a.end_state().norm()));
}

TEST(Integrate, NodeTimesStrictlyIncreasing)
{
    auto tr = integrate(lorenz(), Vec3(1, 1, 1), 5.0);
    const auto& t = tr.node_times();
    EXPECT_EQ(t.front(), 0.0);
    EXPECT_EQ(t.back(), 5.0);
    for (std::size_t i = 1; i < t.size(); ++i) EXPECT_LT(t[i - 1], t[i]);
}

TEST(Integrate, EscapeReportsLastValidTime)
{
    auto f = linear_diagonal(5, 0, 0);
    try {
        integrate(f, Vec3(1, 0, 0), 10.0);
        FAIL() << "expected escape";
    } catch (const EscapedError& e) {
        EXPECT_GT(e.last_valid_time, 1.0);
        EXPECT_LT(e.last_valid_time, 2.0);
        EXPECT_LE(e.last_valid_state.norm(), 1e4);
    }
}

TEST(Integrate, RejectsBadInput)
{
    EXPECT_THROW(integrate(lorenz(), Vec3(1, 1, 1), -1.0), DomainError);
    EXPECT_THROW(integrate(lorenz(), Vec3(NAN, 1, 1), 1.0), DomainError);
}

TEST(FlowAt, NodesAreExactAndSpanIsChecked)
{
    auto tr = integrate(lorenz(), Vec3(1, 1, 1), 2.0);
    EXPECT_EQ(flow_at(tr, 0.0), tr.x0());
    for (std::size_t i = 0; i < tr.node_times().size(); i += 7) {
        EXPECT_EQ(flow_at(tr, tr.node_times()[i]), tr.node_states()[i]);
    }
    EXPECT_THROW(flow_at(tr, 2.5), DomainError);
    EXPECT_THROW(flow_at(tr, -0.1), DomainError);
}

TEST(FlowAt, LinearMidpoint)
{
    auto f = linear_diagonal(-1, -1, -1);
    auto tr = integrate(f, Vec3(1, 0, 0), 1.0);
    for (double t : {0.123, 0.5, 0.77}) {
        Vec3 exact(std::exp(-t), 0, 0);
        EXPECT_LE(distance(flow_at(tr, t), exact), 10 * tol_target(exact));
    }
}

TEST(FlowMap, NegativeTimeInvertsForward)
{
    auto f = lorenz();
    Vec3 x(1, 1, 1);
    Vec3 y = flow_map(f, x, 0.5);
    EXPECT_LE(distance(flow_map(f, y, -0.5), x), 1e-6);
}

TEST(Semigroup, RandomSplits)
{
    CounterRng rng(7);
    for (const auto& f : {lorenz(), saddle(), limit_cycle()}) {
        Vec3 x0 = f.name == "lorenz" ? Vec3(1, 1, 1) : Vec3(0.3, 0.2, 0.1);
        for (int k = 0; k < 50; ++k) {
            double s = rng.uniform(0.0, 1.0), t = rng.uniform(0.0, 1.0);
            auto whole = integrate(f, x0, s + t);
            auto rest = integrate(f, flow_at(whole, s), t);
            Vec3 a = whole.end_state();
            EXPECT_LE(distance(a, rest.end_state()), 10 * tol_target(a))
                << f.name << " s=" << s << " t=" << t;
        }
    }
}

TEST(Singularities, StayFixed)
{
    for (const auto& f : {lorenz(), saddle(), limit_cycle()}) {
        for (const auto& q : f.singularities) {
            auto tr = integrate(f, q, 50.0);
            for (const auto& x : tr.node_states()) EXPECT_LE(distance(x, q), 1e-9);
        }
    }
}

TEST(PropagateFrame, ConstantJacobian)
{
    auto f = linear_diagonal(-2, 1, 3);
    auto tr = integrate(f, Vec3(0.1, 0.1, 0.1), 1.0);
    auto fr = propagate_frame(f, tr, {Vec3::UnitX()});
    EXPECT_EQ(fr.vector(0, 0.0), Vec3::UnitX());
    Vec3 v = fr.final_vectors()[0];
    EXPECT_NEAR(v[0], std::exp(-2.0), 1e-9);
    EXPECT_NEAR(v[1], 0.0, 1e-12);
    EXPECT_NEAR(v[2], 0.0, 1e-12);
}

TEST(PropagateFrame, FlowDirectionInvariance)
{
    auto f = lorenz();
    auto tr = integrate(f, Vec3(1, 1, 1), 3.0);
    auto fr = propagate_frame(f, tr, {f(tr.x0())});
    for (double t : {0.5, 1.3, 3.0}) {
        Vec3 expect = f(flow_at(tr, t));
        EXPECT_LE((fr.vector(0, t) - expect).norm(), 1e-5 * std::max(1.0, expect.norm()));
    }
}

TEST(PropagateFrame, MatchesFiniteDifference)
{
    auto f = lorenz();
    CounterRng rng(11);
    Vec3 x0(1, 1, 1);
    Vec3 v0 = rng.unit_vector();
    FlowOptions fine;
    fine.tol = {1e-13, 1e-13};
    auto tr = integrate(f, x0, 5.0, fine);
    auto fr = propagate_frame(f, tr, {v0}, FrameOptions{{1e-12, 1e-12}, 0.05, 1e-10});
    const double h = 1e-6;
    Vec3 fd = (integrate(f, x0 + h * v0, 5.0, fine).end_state() - tr.end_state()) / h;
    Vec3 v = fr.final_vectors()[0];
    EXPECT_LE((v - fd).norm() / v.norm(), 1e-3);
}

TEST(PropagateFrame, Linearity)
{
    auto f = lorenz();
    auto tr = integrate(f, Vec3(1, 1, 1), 2.0);
    Vec3 a(1, 0, 0), b(0, 1, 1);
    auto f1 = propagate_frame(f, tr, {a, b});
    auto f2 = propagate_frame(f, tr, {3.5 * a, 3.5 * b});
    for (int i = 0; i < 2; ++i) {
        Vec3 u = f1.final_vectors()[i] * 3.5;
        Vec3 w = f2.final_vectors()[i];
        EXPECT_LE((u - w).norm() / u.norm(), 1e-8);
    }
}

TEST(PropagateFrame, RejectsDependentVectors)
{
    auto f = lorenz();
    auto tr = integrate(f, Vec3(1, 1, 1), 1.0);
    EXPECT_THROW(propagate_frame(f, tr, {Vec3(1, 0, 0), Vec3(2, 0, 0)}), DomainError);
}

TEST(PropagateFrame, CollapseIsSignalled)
{
    // Rates 40 and 0 over t = 1 align both vectors with e1.
    auto f = linear_diagonal(40, 0, -1);
    auto tr = integrate(f, Vec3::Zero(), 1.0);
    EXPECT_THROW(propagate_frame(f, tr, {Vec3(1, 1, 0), Vec3(1, -1, 0)}), FrameCollapseError);
}
