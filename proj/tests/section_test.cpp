#include <shadowlab/section.hpp>

#include <gtest/gtest.h>

using namespace shadowlab;

namespace {

const SingularSectionPair& lorenz_sections()
{
    static const SingularSectionPair pair = build_singular_sections(lorenz(), Vec3::Zero());
    return pair;
}

const UnstableBranches& lorenz_branches()
{
    static const UnstableBranches ub = branch_landmarks(lorenz(), lorenz_sections());
    return ub;
}

const AttractorSample& lorenz_sample()
{
    static const AttractorSample s(
        refined_attractor_cloud(lorenz(), lorenz_sections().frame, AttractorSampleSpec{}));
    return s;
}

/// First sampled branch point at distance >= r from sigma.
Vec3 branch_point(const BranchCurve& b, double r)
{
    for (const auto& x : b.points)
        if (x.norm() >= r) return x;
    return b.points.back();
}

Vec3 mirror(const Vec3& x) { return Vec3(-x[0], -x[1], x[2]); }

} // namespace

TEST(SingularSections, LorenzDefaultsAreValid)
{
    const auto& pair = lorenz_sections();
    for (const CrossSection* s : {&pair.top, &pair.bottom}) {
        EXPECT_GE(s->min_transversality, 1e-2);
        EXPECT_LE(s->lstar_bracket, 1e-9);
        EXPECT_EQ(s->leaf_b.size(), 11u);
        // l* lies over the stable manifold: its orbit comes close to sigma.
        EXPECT_LT(s->lstar_approach, 1e-2);
        // Points on either side of l* leave along different branches.
        for (double b : {-0.4, 0.0, 0.4}) {
            double a = s->lstar(b);
            int r = exit_branch(lorenz(), pair.frame, s->point(a + 1e-3, b));
            int l = exit_branch(lorenz(), pair.frame, s->point(a - 1e-3, b));
            EXPECT_EQ(r, s->component(a + 1e-3, b));
            EXPECT_EQ(l, s->component(a - 1e-3, b));
            EXPECT_EQ(r, -l);
        }
    }
    EXPECT_NEAR(pair.top.center[2], 1.0, 1e-12);
    EXPECT_NEAR(pair.bottom.center[2], -1.0, 1e-12);
}

TEST(SingularSections, DegenerateExtentIsGeometryError)
{
    SectionOptions opt;
    opt.half_across = 0.0;
    EXPECT_THROW(build_singular_sections(lorenz(), Vec3::Zero(), opt), GeometryError);
}

TEST(SingularSections, SaddleIsNotLorenzLike)
{
    EXPECT_THROW(build_singular_sections(saddle(), Vec3::Zero()), GeometryError);
}

TEST(BranchLandmarks, LorenzCertified)
{
    const auto& ub = lorenz_branches();
    EXPECT_GT(ub.beta, 0.0);
    EXPECT_EQ(ub.gamma, ub.gamma_requested);
    const auto& c = ub.certificate;
    EXPECT_TRUE(c.condition1);
    EXPECT_GE(c.launches_per_side, 100u);
    EXPECT_EQ(c.launches_total, 4 * c.launches_per_side);
    EXPECT_EQ(c.missed_own, 0u);
    EXPECT_EQ(c.entered_other, 0u);
    EXPECT_GT(distance(ub.y_left, ub.y_right), 2.0 * ub.beta);
    // Landmarks sit at arclength 2 beta, inside W_gamma.
    EXPECT_LE(ub.y_right.norm(), ub.gamma);
}

TEST(BranchLandmarks, BackwardContainmentOfSampledBranch)
{
    const auto& ub = lorenz_branches();
    for (const BranchCurve* b : {&ub.left, &ub.right}) {
        ASSERT_GT(b->gamma_index, 2u);
        ASSERT_LT(b->gamma_index, b->points.size());
        for (std::size_t i = 1; i < b->gamma_index; ++i) {
            EXPECT_LE(b->points[i].norm(), ub.gamma);
            EXPECT_GE(b->points[i].norm(), b->points[i - 1].norm());
        }
    }
    // Backward orbit of a branch point stays in B_gamma.
    Vec3 p = branch_point(ub.right, 0.9 * ub.gamma);
    // Short horizon: off the exact branch, backward errors grow like e^{22.8 t}.
    auto back = integrate(lorenz().reversed(), p, 0.5);
    for (const auto& x : back.node_states()) EXPECT_LE(x.norm(), ub.gamma + 1e-9);
}

TEST(BranchLandmarks, MirrorSymmetry)
{
    const auto& ub = lorenz_branches();
    EXPECT_LT(distance(ub.y_left, mirror(ub.y_right)), 1e-6);
    for (double s : {0.1, 0.5, 1.0}) {
        EXPECT_LT(distance(ub.left.at_arclength(s), mirror(ub.right.at_arclength(s))), 1e-6);
    }
}

TEST(BranchLandmarks, OversizedGammaIsShrunk)
{
    LandmarkOptions opt;
    opt.gamma = 100.0;
    opt.launches = 20;
    auto ub = branch_landmarks(lorenz(), lorenz_sections(), opt);
    EXPECT_LT(ub.gamma, 100.0);
    EXPECT_GT(ub.gamma_shrinks, 0);
    auto r = trace_branch(lorenz(), lorenz_sections().frame, 1, ub.gamma);
    EXPECT_TRUE(r.contained);
    EXPECT_FALSE(trace_branch(lorenz(), lorenz_sections().frame, 1, 100.0).contained);
}

TEST(StableDirection, SaddleIsStrongestContraction)
{
    for (Vec3 x : {Vec3(0.3, 0.2, 0.1), Vec3(-1, 2, 0.5), Vec3(0, 0, 0.01)}) {
        auto sd = estimate_stable_direction(saddle(2, 3, 1), x);
        ASSERT_TRUE(sd.converged);
        EXPECT_LT(line_angle_deg(sd.direction, Vec3::UnitY()), 1.0);
    }
}

TEST(StableDirection, IsotropicFieldIsInconclusive)
{
    VectorField constant;
    constant.name = "constant";
    constant.eval = [](const Vec3&) { return Vec3(1, 0, 0); };
    constant.jacobian = [](const Vec3&) { return Mat3::Zero().eval(); };
    EXPECT_FALSE(estimate_stable_direction(constant, Vec3(0, 0, 0)).converged);
    EXPECT_FALSE(estimate_stable_direction(linear_diagonal(-1, -1, -1), Vec3(1, 1, 1)).converged);
}

// The strong stable bundle of Lorenz turns by up to ~9 degrees per 0.01 time
// where the orbit speed is ~250, so continuity is audited against the exact
// equivariance DX_t E(x) = E(X_t x) and the projective rotation bound |J| dt.
TEST(StableDirection, LorenzContinuousAlongOrbit)
{
    auto f = lorenz();
    Vec3 x = integrate(f, Vec3(1, 1, 1), 50).end_state();
    const double dt = 0.01;
    auto tr = integrate(f, x, 50 * dt);
    std::optional<Vec3> prev;
    for (int k = 0; k <= 50; ++k) {
        auto sd = estimate_stable_direction(f, tr.at(dt * k));
        ASSERT_TRUE(sd.converged) << "at step " << k;
        if (prev) {
            auto seg = integrate(f, tr.at(dt * (k - 1)), dt);
            Vec3 moved = propagate_frame(f, seg, {*prev}).final_vectors()[0];
            EXPECT_LT(line_angle_deg(moved, sd.direction), 0.1) << "at step " << k;
            double jmax = 0.0;
            for (double s : {0.0, 0.5, 1.0}) jmax = std::max(jmax, f.jacobian(seg.at(s * dt)).norm());
            double bound = 1.5 * jmax * dt * 180.0 / std::numbers::pi;
            EXPECT_LE(line_angle_deg(*prev, sd.direction), bound) << "at step " << k;
        }
        prev = sd.direction;
    }
}

TEST(SideClassification, BranchPointsAreSideAndStayUnderHalving)
{
    const auto& ub = lorenz_branches();
    const auto& sample = lorenz_sample();
    for (const BranchCurve* b : {&ub.left, &ub.right}) {
        for (double frac : {0.25, 0.5, 0.75, 1.0, 1.05}) {
            Vec3 p = branch_point(*b, frac * ub.gamma);
            SideProbe probe;
            auto sc = classify_side(lorenz(), p, sample, probe);
            EXPECT_EQ(sc.verdict, SideVerdict::side) << "at " << p.transpose();
            probe.radius /= 2.0;
            auto half = classify_side(lorenz(), p, sample, probe);
            EXPECT_EQ(half.verdict, SideVerdict::side) << "halved at " << p.transpose();
        }
    }
}

TEST(SideClassification, GenericPointsAreBiSideAndPositivelyInvariant)
{
    auto f = lorenz();
    const auto& sample = lorenz_sample();
    CounterRng rng = CounterRng(11).split("generic");
    int bi = 0, side = 0, audited = 0;
    for (int i = 0; i < 30; ++i) {
        Vec3 x = sample.points()[rng.below(AttractorSampleSpec{}.count)];
        auto sc = classify_side(f, x, sample);
        if (sc.verdict == SideVerdict::side) ++side;
        if (sc.verdict != SideVerdict::bi_side) continue;
        ++bi;
        if (audited >= 20) continue;
        ++audited;
        for (double t : {1.0, 5.0, 10.0}) {
            auto img = classify_side(f, flow_map(f, x, t), sample);
            EXPECT_EQ(img.verdict, SideVerdict::bi_side) << "X_" << t << " of " << x.transpose();
        }
    }
    EXPECT_GE(bi, 20);
    EXPECT_EQ(side, 0);
}

TEST(SideClassification, FarPointIsNeither)
{
    auto sc = classify_side(lorenz(), Vec3(60, 60, -40), lorenz_sample());
    EXPECT_EQ(sc.verdict, SideVerdict::neither);
}

TEST(SideClassification, StrongStableAxisSanityIsReported)
{
    auto hits = strong_stable_axis_hits(lorenz_sample(), lorenz_sections().frame);
    RecordProperty("strong_stable_axis_hits", static_cast<int>(hits));
    SUCCEED();
}

TEST(Refinement, PointsLieNearSingularity)
{
    auto f = lorenz();
    const auto& frame = lorenz_sections().frame;
    auto cloud = sample_attractor(f, {Vec3(1, 1, 1), 100, 500, 500000});
    RefinementSpec spec;
    spec.crossings = 3;
    auto pts = refine_near_singularity(f, frame, cloud.points, spec);
    ASSERT_FALSE(pts.empty());
    for (const auto& x : pts) EXPECT_LE(x.norm(), spec.record_radius + 1e-9);
    // Both branches are populated.
    std::size_t r = 0, l = 0;
    for (const auto& x : pts) {
        if (x.norm() < 1.0) continue;
        (frame.coords(x)[0] > 0 ? r : l)++;
    }
    EXPECT_GT(r, 0u);
    EXPECT_GT(l, 0u);
}
