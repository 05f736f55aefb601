// Local geometry around a Lorenz-like singularity: its eigen-frame, the pair
// of transverse sections above and below it, the two unstable branches with
// their landmark points, finite-time stable directions, and side / bi-side
// classification of points against an attractor sample.

#ifndef SHADOWLAB_SECTION_HPP
#define SHADOWLAB_SECTION_HPP

#include "attractor.hpp"
#include "core.hpp"
#include "flow.hpp"
#include "models.hpp"
#include "rng.hpp"

#include <optional>
#include <string>
#include <vector>

namespace shadowlab {

/// Unit vector with its largest-magnitude component made positive.
inline Vec3 canonical_direction(const Vec3& v)
{
    Vec3 u = v.normalized();
    int k = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(u[i]) > std::abs(u[k])) k = i;
    return u[k] < 0 ? Vec3(-u) : u;
}

/// Eigen-frame of a Lorenz-like singularity with canonical orientations. The
/// branch along +unstable is called "r" (+1), the other "l" (-1).
struct SingularFrame {
    LorenzLikeSaddle saddle;
    Vec3 unstable, weak, strong;
    Mat3 to_coords; // inverse of [unstable weak strong]

    const Vec3& point() const { return saddle.point; }
    /// Coordinates of x - sigma in the eigenbasis.
    Vec3 coords(const Vec3& x) const { return to_coords * (x - saddle.point); }
};

inline SingularFrame singular_frame(const VectorField& field, const Vec3& q)
{
    SingularFrame f;
    f.saddle = lorenz_like_saddle(field, q);
    f.unstable = canonical_direction(f.saddle.unstable);
    f.weak = canonical_direction(f.saddle.weak_stable);
    f.strong = canonical_direction(f.saddle.strong_stable);
    Mat3 B;
    B << f.unstable, f.weak, f.strong;
    f.to_coords = B.inverse();
    return f;
}

inline std::string branch_name(int side) { return side > 0 ? "r" : "l"; }

/// Side (+1 = r, -1 = l) of the unstable branch along which the orbit of x
/// leaves the singularity: decided at the first node after the closest
/// approach where |x - sigma| >= max(exit_radius, 2 * closest). 0 if undecided
/// within the time budget.
inline int exit_branch(const VectorField& field, const SingularFrame& frame, const Vec3& x,
                       double exit_radius = 1.0, double budget = 20.0,
                       const FlowOptions& flow = {})
{
    double closest = kInf;
    Vec3 y = x;
    for (double elapsed = 0.0; elapsed < budget;) {
        double len = std::min(2.0, budget - elapsed);
        auto part = integrate_until_escape(field, y, len, flow);
        for (const auto& s : part.trajectory.node_states()) {
            double r = distance(s, frame.point());
            closest = std::min(closest, r);
            if (r >= exit_radius && r >= 2.0 * closest) {
                double c = frame.coords(s)[0];
                if (c != 0.0) return c > 0 ? 1 : -1;
            }
        }
        if (part.escaped) return 0;
        y = part.trajectory.end_state();
        elapsed += len;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Sections.

/// Rectangle center + a * across + b * along, |a| <= half_across,
/// |b| <= half_along. l* is the curve a = lstar(b) where orbits switch
/// branches, bisected at sampled b and interpolated linearly between them;
/// leaves are its translates a - lstar(b) = const.
struct CrossSection {
    Vec3 center = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
    Vec3 across = Vec3::UnitX();
    Vec3 along = Vec3::UnitY();
    double half_across = 0.0;
    double half_along = 0.0;
    std::vector<double> leaf_b, leaf_a; // samples of l*
    double lstar_bracket = kInf;        // widest final bisection bracket
    /// Sign of (a - lstar(b)) for points whose orbits leave along branch r.
    int right_side = 1;
    double min_transversality = 0.0;
    /// Closest approach to sigma of the orbit from the middle of l*.
    double lstar_approach = kInf;

    Vec3 point(double a, double b) const { return center + a * across + b * along; }
    double across_coord(const Vec3& x) const { return (x - center).dot(across); }
    double along_coord(const Vec3& x) const { return (x - center).dot(along); }

    double lstar(double b) const
    {
        if (leaf_b.size() == 1) return leaf_a.front();
        auto it = std::upper_bound(leaf_b.begin(), leaf_b.end(), b);
        std::size_t j = std::clamp<std::size_t>(static_cast<std::size_t>(it - leaf_b.begin()), 1,
                                                leaf_b.size() - 1);
        double w = (b - leaf_b[j - 1]) / (leaf_b[j] - leaf_b[j - 1]);
        return leaf_a[j - 1] + w * (leaf_a[j] - leaf_a[j - 1]);
    }
    /// Signed offset of the leaf through (a, b) from l*.
    double leaf_offset(double a, double b) const { return a - lstar(b); }
    Vec3 lstar_point(double b) const { return point(lstar(b), b); }

    /// Component (+1 = r, -1 = l) of the point (a, b); 0 on l*.
    int component(double a, double b) const
    {
        double o = leaf_offset(a, b);
        if (o == 0.0) return 0;
        return (o > 0 ? 1 : -1) * right_side;
    }
    /// Euclidean distance from x to the closed rectangle.
    double distance_to(const Vec3& x) const
    {
        double a = std::clamp(across_coord(x), -half_across, half_across);
        double b = std::clamp(along_coord(x), -half_along, half_along);
        return distance(x, point(a, b));
    }
};

struct SectionOptions {
    double offset = 1.0;
    double half_across = 0.5;
    double half_along = 0.5;
    double transversality_floor = 1e-2;
    double exit_radius = 1.0;
    double horizon = 20.0; // T_R
    double bisection_tol = 1e-12;
    std::size_t leaf_samples = 11;
};

struct SingularSectionPair {
    SingularFrame frame;
    CrossSection top, bottom;
    double horizon = 0.0;
};

namespace detail {

inline CrossSection make_section(const VectorField& field, const SingularFrame& frame,
                                 double sign, const SectionOptions& opt, const FlowOptions& flow)
{
    CrossSection s;
    s.center = frame.point() + sign * opt.offset * frame.weak;
    s.normal = frame.weak;
    s.along = (frame.strong - frame.strong.dot(s.normal) * s.normal).normalized();
    s.across = s.normal.cross(s.along);
    if (s.across.dot(frame.unstable) < 0) s.across = -s.across;
    s.half_across = opt.half_across;
    s.half_along = opt.half_along;

    // Transversality on a 21 x 21 grid.
    const int n = 20;
    double flux_sign = 0.0;
    double worst = kInf;
    Vec3 worst_point = s.center;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            Vec3 x = s.point(-s.half_across + 2.0 * s.half_across * i / n,
                             -s.half_along + 2.0 * s.half_along * j / n);
            double flux = field(x).dot(s.normal);
            if (flux_sign == 0.0 && flux != 0.0) flux_sign = flux > 0 ? 1.0 : -1.0;
            double m = flux * flux_sign;
            if (m < worst) {
                worst = m;
                worst_point = x;
            }
        }
    s.min_transversality = worst;
    if (!(worst >= opt.transversality_floor)) {
        throw GeometryError("section not transverse to the flow", worst_point);
    }

    const std::size_t nb = std::max<std::size_t>(1, opt.leaf_samples);
    s.lstar_bracket = 0.0;
    for (std::size_t j = 0; j < nb; ++j) {
        const double b = nb == 1 ? 0.0 : -s.half_along + 2.0 * s.half_along * j / (nb - 1);
        auto exit_at = [&](double a) {
            return exit_branch(field, frame, s.point(a, b), opt.exit_radius, opt.horizon, flow);
        };
        double lo = -s.half_across, hi = s.half_across;
        int e_lo = exit_at(lo), e_hi = exit_at(hi);
        if (e_lo == 0 || e_hi == 0 || e_lo == e_hi) {
            throw GeometryError("section edges do not leave along opposite branches",
                                s.point(0.0, b));
        }
        int right = e_hi > 0 ? 1 : -1;
        if (j > 0 && right != s.right_side) {
            throw GeometryError("branch sides swap along the section", s.point(0.0, b));
        }
        s.right_side = right;
        while (hi - lo > opt.bisection_tol) {
            double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            int e = exit_at(mid);
            if (e == e_lo) {
                lo = mid;
            } else if (e == e_hi) {
                hi = mid;
            } else {
                lo = hi = mid; // never leaves: mid lies on the stable manifold
            }
        }
        s.leaf_b.push_back(b);
        s.leaf_a.push_back(0.5 * (lo + hi));
        s.lstar_bracket = std::max(s.lstar_bracket, hi - lo);
    }

    auto tr = integrate_until_escape(field, s.lstar_point(0.0), opt.horizon, flow).trajectory;
    for (const auto& x : tr.node_states()) {
        s.lstar_approach = std::min(s.lstar_approach, distance(x, frame.point()));
    }
    return s;
}

} // namespace detail

/// Sections at +-offset along the weak stable axis, normal to it, with l*
/// located by bisection on the branch the orbits leave along.
inline SingularSectionPair build_singular_sections(const VectorField& field, const Vec3& q,
                                                   const SectionOptions& opt = {},
                                                   const FlowOptions& flow = {})
{
    SingularSectionPair pair;
    pair.frame = singular_frame(field, q);
    if (!(opt.offset > 0.0 && opt.half_across > 0.0 && opt.half_along > 0.0)) {
        throw GeometryError("degenerate section extent", q);
    }
    pair.top = detail::make_section(field, pair.frame, 1.0, opt, flow);
    pair.bottom = detail::make_section(field, pair.frame, -1.0, opt, flow);
    pair.horizon = opt.horizon;
    return pair;
}

// ---------------------------------------------------------------------------
// Unstable branches and landmarks.

/// Polyline sampled along one unstable branch, starting at sigma.
struct BranchCurve {
    int side = 1;
    std::vector<Vec3> points;
    std::vector<double> arclength;
    /// First index whose distance to sigma exceeds gamma (points.size() if
    /// none does).
    std::size_t gamma_index = 0;

    double length() const { return arclength.empty() ? 0.0 : arclength.back(); }

    Vec3 at_arclength(double s) const
    {
        if (!(s >= 0.0 && s <= length())) {
            throw DomainError("arclength " + std::to_string(s) + " outside sampled branch");
        }
        auto it = std::lower_bound(arclength.begin(), arclength.end(), s);
        std::size_t j = static_cast<std::size_t>(it - arclength.begin());
        if (j == 0) return points.front();
        double w = (s - arclength[j - 1]) / (arclength[j] - arclength[j - 1]);
        return points[j - 1] + w * (points[j] - points[j - 1]);
    }
};

/// Samples the branch on `side` until its distance to sigma reaches
/// `extent` * gamma (or the budget runs out). `contained` reports whether the
/// distance to sigma increases monotonically up to the first exit from
/// B_gamma, which is the reading of O^-(x) in B_gamma used here.
struct BranchTrace {
    BranchCurve curve;
    bool contained = false;
};

inline BranchTrace trace_branch(const VectorField& field, const SingularFrame& frame, int side,
                                double gamma, double extent = 1.5, double budget = 40.0,
                                const FlowOptions& flow = {})
{
    const Vec3& q = frame.point();
    const double start = 1e-8 * std::max(1.0, gamma);
    BranchTrace out;
    BranchCurve& c = out.curve;
    c.side = side;
    c.points.push_back(q);
    c.arclength.push_back(0.0);
    const double spacing = 1e-3 * gamma;

    Vec3 y = q + side * start * frame.unstable;
    c.points.push_back(y);
    c.arclength.push_back(start);
    double arc = start;
    Vec3 prev = y;
    Vec3 last_kept = y;
    double last_r = start;
    bool monotone = true;
    bool exited = false;
    bool done = false;
    for (double elapsed = 0.0; elapsed < budget && !done;) {
        double len = std::min(2.0, budget - elapsed);
        auto part = integrate_until_escape(field, y, len, flow);
        const auto& tr = part.trajectory;
        const auto& times = tr.node_times();
        for (std::size_t k = 1; k < times.size() && !done; ++k) {
            for (int m = 1; m <= 8; ++m) {
                double t = times[k - 1] + (times[k] - times[k - 1]) * m / 8.0;
                Vec3 x = tr.at(t);
                arc += distance(x, prev);
                prev = x;
                double r = distance(x, q);
                if (!exited) {
                    if (r < last_r) monotone = false;
                    last_r = r;
                }
                bool crossing = !exited && r > gamma;
                if (crossing || distance(x, last_kept) >= spacing) {
                    c.points.push_back(x);
                    c.arclength.push_back(arc);
                    last_kept = x;
                }
                if (crossing) {
                    exited = true;
                    c.gamma_index = c.points.size() - 1;
                }
                if (r >= extent * gamma) {
                    done = true;
                    break;
                }
            }
        }
        if (part.escaped) break;
        y = tr.end_state();
        elapsed += len;
    }
    if (!exited) c.gamma_index = c.points.size();
    out.contained = exited && monotone;
    return out;
}

struct LandmarkOptions {
    double gamma = 2.0;
    std::size_t launches = 100; // per component per section
    double slab_width = 1e-3;   // launches lie within this distance of l*
    double beta_floor = 1e-3;
    int bisection_steps = 20;
    double launch_budget = 6.0;
    std::size_t lstar_samples = 11;
    int max_gamma_shrinks = 12;
    std::uint64_t seed = 0;
};

struct LandmarkCertificate {
    double beta = 0.0;
    double landmark_separation = 0.0; // d(y^l, y^r)
    double min_section_distance = kInf;
    double min_lstar_orbit_distance = kInf;
    bool condition1 = false;
    std::size_t launches_per_side = 0;
    std::size_t launches_total = 0;
    std::size_t missed_own = 0;   // never entered the own landmark ball
    std::size_t entered_other = 0; // entered the other ball within T_sigma
    double horizon = 0.0;         // T_sigma: latest first entry into the own ball
    bool pass() const { return condition1 && missed_own == 0 && entered_other == 0; }
};

struct UnstableBranches {
    Vec3 sigma = Vec3::Zero();
    double gamma_requested = 0.0;
    double gamma = 0.0;
    int gamma_shrinks = 0;
    BranchCurve left, right;
    double beta = 0.0;
    Vec3 y_left = Vec3::Zero(), y_right = Vec3::Zero();
    LandmarkCertificate certificate;

    const BranchCurve& branch(int side) const { return side > 0 ? right : left; }
    const Vec3& landmark(int side) const { return side > 0 ? y_right : y_left; }
};

namespace detail {

/// First time in [0, duration] at which the dense trajectory is inside the
/// ball, checked on 8 sub-steps per integrator step; kInf if never.
inline double first_entry(const Trajectory& tr, const Vec3& center, double radius)
{
    const auto& times = tr.node_times();
    if (distance(tr.x0(), center) <= radius) return 0.0;
    for (std::size_t k = 1; k < times.size(); ++k) {
        for (int m = 1; m <= 8; ++m) {
            double t = times[k - 1] + (times[k] - times[k - 1]) * m / 8.0;
            if (distance(tr.at(t), center) <= radius) return t;
        }
    }
    return kInf;
}

struct LandmarkProblem {
    const VectorField& field;
    const SingularSectionPair& sections;
    const BranchCurve& left;
    const BranchCurve& right;
    const LandmarkOptions& opt;
    const FlowOptions& flow;
    std::vector<std::vector<Vec3>> lstar_orbits; // truncated at closest approach
    std::vector<Trajectory> launches;
    std::vector<int> launch_side;

    LandmarkProblem(const VectorField& f, const SingularSectionPair& s, const BranchCurve& l,
                    const BranchCurve& r, const LandmarkOptions& o, const FlowOptions& fl)
        : field(f), sections(s), left(l), right(r), opt(o), flow(fl)
    {
        const Vec3& q = s.frame.point();
        CounterRng rng = CounterRng(opt.seed).split("landmark-launches");
        for (const CrossSection* sec : {&s.top, &s.bottom}) {
            for (std::size_t i = 0; i < opt.lstar_samples; ++i) {
                double b = opt.lstar_samples == 1
                               ? 0.0
                               : -sec->half_along +
                                     2.0 * sec->half_along * i / (opt.lstar_samples - 1);
                auto tr = integrate_until_escape(f, sec->lstar_point(b), s.horizon, fl)
                              .trajectory;
                std::vector<Vec3> pts;
                double best = kInf;
                std::size_t arg = 0;
                const auto& st = tr.node_states();
                for (std::size_t k = 0; k < st.size(); ++k) {
                    double d = distance(st[k], q);
                    if (d < best) {
                        best = d;
                        arg = k;
                    }
                }
                pts.assign(st.begin(), st.begin() + static_cast<std::ptrdiff_t>(arg) + 1);
                lstar_orbits.push_back(std::move(pts));
            }
            for (int side : {-1, 1}) {
                for (std::size_t n = 0; n < opt.launches; ++n) {
                    double off = opt.slab_width * (1.0 - rng.uniform()); // (0, w]
                    double b = rng.uniform(-sec->half_along, sec->half_along);
                    double a = sec->lstar(b) + side * sec->right_side * off;
                    a = std::clamp(a, -sec->half_across, sec->half_across);
                    launches.push_back(
                        integrate_until_escape(f, sec->point(a, b), opt.launch_budget, fl)
                            .trajectory);
                    launch_side.push_back(side);
                }
            }
        }
    }

    LandmarkCertificate certify(double beta) const
    {
        LandmarkCertificate c;
        c.beta = beta;
        Vec3 yl = left.at_arclength(2.0 * beta);
        Vec3 yr = right.at_arclength(2.0 * beta);
        c.landmark_separation = distance(yl, yr);
        for (const Vec3* y : {&yl, &yr}) {
            for (const CrossSection* sec : {&sections.top, &sections.bottom}) {
                c.min_section_distance = std::min(c.min_section_distance, sec->distance_to(*y));
            }
            for (const auto& orbit : lstar_orbits) {
                for (const auto& x : orbit) {
                    c.min_lstar_orbit_distance =
                        std::min(c.min_lstar_orbit_distance, distance(x, *y));
                }
            }
        }
        c.condition1 = c.min_section_distance > beta && c.min_lstar_orbit_distance > beta &&
                       c.landmark_separation > 2.0 * beta;

        c.launches_total = launches.size();
        c.launches_per_side = opt.launches;
        std::vector<double> own(launches.size()), other(launches.size());
        for (std::size_t i = 0; i < launches.size(); ++i) {
            const Vec3& mine = launch_side[i] > 0 ? yr : yl;
            const Vec3& theirs = launch_side[i] > 0 ? yl : yr;
            own[i] = first_entry(launches[i], mine, beta);
            other[i] = first_entry(launches[i], theirs, beta);
            if (std::isfinite(own[i])) c.horizon = std::max(c.horizon, own[i]);
        }
        for (std::size_t i = 0; i < launches.size(); ++i) {
            if (!std::isfinite(own[i])) ++c.missed_own;
            if (other[i] <= c.horizon) ++c.entered_other;
        }
        return c;
    }
};

} // namespace detail

/// Traces both branches out of B_gamma (halving gamma until the containment
/// reading holds), then picks the largest beta found in [floor, gamma/2] whose
/// landmarks y at arclength 2 beta pass the separation condition and the
/// launch certification.
inline UnstableBranches branch_landmarks(const VectorField& field,
                                         const SingularSectionPair& sections,
                                         const LandmarkOptions& opt = {},
                                         const FlowOptions& flow = {})
{
    const SingularFrame& frame = sections.frame;
    UnstableBranches ub;
    ub.sigma = frame.point();
    ub.gamma_requested = opt.gamma;
    double gamma = opt.gamma;
    if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
    for (int k = 0;; ++k) {
        auto l = trace_branch(field, frame, -1, gamma, 1.5, 40.0, flow);
        auto r = trace_branch(field, frame, 1, gamma, 1.5, 40.0, flow);
        if (l.contained && r.contained) {
            ub.left = std::move(l.curve);
            ub.right = std::move(r.curve);
            break;
        }
        if (k >= opt.max_gamma_shrinks) {
            throw ConfigError("no gamma keeps both unstable branches contained");
        }
        gamma *= 0.5;
        ++ub.gamma_shrinks;
    }
    ub.gamma = gamma;

    detail::LandmarkProblem problem(field, sections, ub.left, ub.right, opt, flow);
    double cap = gamma / 2.0;
    // Larger balls are easier to enter, so failures sit at small beta: scan
    // down from the cap for a passing radius, then bisect towards the cap.
    LandmarkCertificate best = problem.certify(cap);
    if (!best.pass()) {
        double hi = cap, lo = cap;
        bool found = false;
        while (lo * 0.8 >= opt.beta_floor) {
            hi = lo;
            lo *= 0.8;
            best = problem.certify(lo);
            if (best.pass()) {
                found = true;
                break;
            }
        }
        if (!found) {
            throw ConfigError("landmark conditions fail for every beta down to the floor " +
                              std::to_string(opt.beta_floor));
        }
        for (int i = 0; i < opt.bisection_steps; ++i) {
            double mid = 0.5 * (lo + hi);
            LandmarkCertificate c = problem.certify(mid);
            if (c.pass()) {
                lo = mid;
                best = c;
            } else {
                hi = mid;
            }
        }
    }
    ub.beta = best.beta;
    ub.certificate = best;
    ub.y_left = ub.left.at_arclength(2.0 * ub.beta);
    ub.y_right = ub.right.at_arclength(2.0 * ub.beta);
    return ub;
}

// ---------------------------------------------------------------------------
// Attractor refinement near the singularity.
//
// A long orbit almost never comes close to the local unstable branches: it
// must first pass within ~1e-5 of the stable manifold. The refinement takes
// the long orbit's crossings of an entry level on the weak stable axis, slides
// each crossing along the unstable direction (which keeps it on the incoming
// sheet to first order) to a log-spaced set of offsets from the stable
// manifold, and records the orbits through the neighbourhood of sigma.

struct RefinementSpec {
    double entry_level = 10.0;  // along the weak stable axis
    double entry_radius = 3.0;  // max distance of a crossing from that axis
    std::size_t crossings = 20;
    int decades = 14;           // offsets 10^-1 .. 10^-decades on both sides
    double record_radius = 3.0;
    double spacing = 0.01;
    double budget = 20.0;
};

inline std::vector<Vec3> refine_near_singularity(const VectorField& field,
                                                 const SingularFrame& frame,
                                                 const std::vector<Vec3>& orbit,
                                                 const RefinementSpec& spec = {},
                                                 const FlowOptions& flow = {})
{
    const Vec3& q = frame.point();
    const Vec3 w = frame.weak;
    Vec3 slide = frame.unstable - frame.unstable.dot(w) * w;
    slide.normalize();

    std::vector<Vec3> entries;
    for (std::size_t i = 1; i < orbit.size(); ++i) {
        double a = (orbit[i - 1] - q).dot(w) - spec.entry_level;
        double b = (orbit[i] - q).dot(w) - spec.entry_level;
        if (!(a > 0.0 && b <= 0.0)) continue;
        Vec3 c = orbit[i - 1] + a / (a - b) * (orbit[i] - orbit[i - 1]);
        Vec3 off = (c - q) - (c - q).dot(w) * w;
        if (off.norm() <= spec.entry_radius) entries.push_back(c);
    }
    std::vector<Vec3> out;
    if (entries.empty()) return out;
    const std::size_t K = std::min(spec.crossings, entries.size());

    auto exit_of = [&](const Vec3& x) {
        return exit_branch(field, frame, x, 1.0, spec.budget, flow);
    };
    for (std::size_t k = 0; k < K; ++k) {
        const Vec3 c = entries[k * entries.size() / K];
        const int e0 = exit_of(c);
        if (e0 == 0) continue;
        double lo = 0.0, hi = 0.0;
        bool found = false;
        for (double step = 0.01; step <= 2.0 * spec.entry_radius && !found; step *= 2.0) {
            for (int sg : {-1, 1}) {
                int e = exit_of(c + sg * step * slide);
                if (e != 0 && e != e0) {
                    hi = sg * step;
                    found = true;
                    break;
                }
            }
        }
        if (!found) continue;
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi) break;
            int e = exit_of(c + mid * slide);
            if (e == e0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        const Vec3 base = c + 0.5 * (lo + hi) * slide;
        for (int d = 1; d <= spec.decades; ++d) {
            for (int sg : {-1, 1}) {
                Vec3 x0 = base + sg * std::pow(10.0, -d) * slide;
                auto tr = integrate_until_escape(field, x0, spec.budget, flow).trajectory;
                const auto& times = tr.node_times();
                double closest = kInf;
                bool left_ball = false;
                Vec3 last = x0;
                bool have_last = false;
                for (std::size_t n = 1; n < times.size() && !left_ball; ++n) {
                    for (int m = 1; m <= 8; ++m) {
                        Vec3 y = tr.at(times[n - 1] + (times[n] - times[n - 1]) * m / 8.0);
                        double r = distance(y, q);
                        closest = std::min(closest, r);
                        if (r > spec.record_radius) {
                            if (closest < 0.5 * spec.record_radius && have_last) {
                                left_ball = true;
                                break;
                            }
                            continue;
                        }
                        if (!have_last || distance(y, last) >= spec.spacing) {
                            out.push_back(y);
                            last = y;
                            have_last = true;
                        }
                    }
                }
            }
        }
    }
    return out;
}

/// Long-orbit sample followed by the refinement points.
inline PointCloud refined_attractor_cloud(const VectorField& field, const SingularFrame& frame,
                                          const AttractorSampleSpec& spec,
                                          const RefinementSpec& refine = {},
                                          const FlowOptions& flow = {})
{
    PointCloud cloud = sample_attractor(field, spec, flow);
    auto extra = refine_near_singularity(field, frame, cloud.points, refine, flow);
    cloud.points.insert(cloud.points.end(), extra.begin(), extra.end());
    return cloud;
}

/// Sample points within `tube` of the strong stable axis segment
/// sigma + t * strong, |t| <= half_length, excluding B_exclude(sigma).
inline std::size_t strong_stable_axis_hits(const AttractorSample& sample,
                                           const SingularFrame& frame,
                                           double half_length = 1.0, double tube = 1e-2,
                                           double exclude = 1e-2)
{
    std::size_t hits = 0;
    const Vec3& q = frame.point();
    for (const auto& x : sample.points()) {
        Vec3 d = x - q;
        if (d.norm() <= exclude) continue;
        double t = std::clamp(d.dot(frame.strong), -half_length, half_length);
        if (distance(d, t * frame.strong) <= tube) ++hits;
    }
    return hits;
}

// ---------------------------------------------------------------------------
// Stable directions and side classification.

struct StableDirectionOptions {
    double min_horizon = 2.0;
    double max_horizon = 32.0;
    double tolerance_deg = 1.0;
    double chunk = 0.5; // renormalization interval of the backward transport
    std::uint64_t seed = 0;
};

struct StableDirection {
    Vec3 direction = Vec3::Zero();
    bool converged = false;
    double horizon = 0.0;
    double rotation_deg = kInf; // change over the last horizon step
};

/// Direction at x most expanded by DX_{-h} from X_h(x), i.e. most contracted
/// forward: two random vectors are carried backward from X_h(x) to x with
/// periodic renormalization. Horizons grow by sqrt(2); converged when both
/// vectors agree within the tolerance at two successive horizons and the two
/// estimates agree too.
inline StableDirection estimate_stable_direction(const VectorField& field, const Vec3& x,
                                                 const StableDirectionOptions& opt = {},
                                                 const FlowOptions& flow = {})
{
    if (!(opt.min_horizon > 0.0 && opt.max_horizon >= opt.min_horizon)) {
        throw ConfigError("stable direction horizons must be positive and ordered");
    }
    StableDirection res;
    CounterRng rng = CounterRng(opt.seed).split("stable-direction");
    const Vec3 v0 = rng.unit_vector();
    const Vec3 v1 = rng.unit_vector();
    std::optional<Vec3> prev;
    for (double h = opt.min_horizon; h <= opt.max_horizon * (1 + 1e-12); h *= std::sqrt(2.0)) {
        Trajectory tr;
        try {
            tr = integrate(field, x, h, flow);
        } catch (const EscapedError&) {
            return res;
        }
        std::vector<Vec3> v{v0, v1};
        for (double t1 = h; t1 > 0.0;) {
            double t0 = std::max(0.0, t1 - opt.chunk);
            v = propagate_backward(field, tr, v, t0, t1);
            for (auto& e : v) {
                double n = e.norm();
                if (!(n > 0.0) || !std::isfinite(n)) return res;
                e /= n;
            }
            t1 = t0;
        }
        Vec3 d = canonical_direction(v[0]);
        res.direction = d;
        res.horizon = h;
        bool agree = line_angle_deg(v[0], v[1]) <= opt.tolerance_deg;
        if (agree && prev) {
            res.rotation_deg = line_angle_deg(*prev, d);
            if (res.rotation_deg <= opt.tolerance_deg) {
                res.converged = true;
                return res;
            }
        }
        prev = agree ? std::optional<Vec3>(d) : std::nullopt;
    }
    return res;
}

enum class SideVerdict { side, bi_side, neither, inconclusive };

inline std::string to_string(SideVerdict v)
{
    switch (v) {
    case SideVerdict::side: return "side";
    case SideVerdict::bi_side: return "bi-side";
    case SideVerdict::neither: return "neither";
    case SideVerdict::inconclusive: return "inconclusive";
    }
    return "?";
}

struct SideProbe {
    double radius = 0.5;
    int levels = 3; // radius, radius/2, radius/4, ...
    std::size_t threshold = 3;
    double slab = 0.02; // points within slab * r of the plane are not counted
    double floor = 1e-3;
};

struct SideClassification {
    Vec3 point = Vec3::Zero();
    double probe_radius = 0.0;
    Vec3 stable_direction = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
    bool direction_converged = false;
    SideVerdict verdict = SideVerdict::inconclusive;
    int component = 0; // +1 / -1: side of the normal holding the hits
    std::vector<double> radii;
    std::vector<std::size_t> plus, minus;
};

/// Splits balls around x by the plane through x spanned by the stable
/// direction and X(x), and counts sample points on each side at every probe
/// radius.
inline SideClassification classify_side(const VectorField& field, const Vec3& x,
                                        const AttractorSample& sample,
                                        const SideProbe& probe = {},
                                        const StableDirectionOptions& sdo = {},
                                        const FlowOptions& flow = {})
{
    if (!(probe.radius > 0.0 && probe.levels >= 1)) {
        throw ConfigError("side probe needs a positive radius and at least one level");
    }
    SideClassification sc;
    sc.point = x;
    sc.probe_radius = probe.radius;
    for (int k = 0; k < probe.levels; ++k) {
        double r = probe.radius / std::pow(2.0, k);
        if (r < probe.floor) break;
        sc.radii.push_back(r);
    }
    if (sc.radii.empty()) throw ConfigError("probe radius is below the resolution floor");

    if (sample.index().ball(x, sc.radii.front()).empty()) {
        sc.verdict = SideVerdict::neither;
        return sc;
    }
    auto sd = estimate_stable_direction(field, x, sdo, flow);
    sc.stable_direction = sd.direction;
    sc.direction_converged = sd.converged;
    Vec3 n = sd.direction.cross(field(x));
    if (!sd.converged || !(n.norm() > 1e-12)) {
        sc.verdict = SideVerdict::inconclusive;
        return sc;
    }
    n.normalize();
    sc.normal = n;

    for (double r : sc.radii) {
        std::size_t p = 0, m = 0;
        sample.index().for_each_in_ball(x, r, [&](std::size_t i) {
            double s = (sample.points()[i] - x).dot(n);
            if (s > probe.slab * r) ++p;
            else if (s < -probe.slab * r) ++m;
        });
        sc.plus.push_back(p);
        sc.minus.push_back(m);
    }

    bool side_plus = true, side_minus = true, both = true;
    for (std::size_t k = 0; k < sc.radii.size(); ++k) {
        std::size_t p = sc.plus[k], m = sc.minus[k];
        side_plus = side_plus && m == 0 && p >= probe.threshold;
        side_minus = side_minus && p == 0 && m >= probe.threshold;
        both = both && p >= probe.threshold && m >= probe.threshold;
    }
    if (side_plus || side_minus) {
        sc.verdict = SideVerdict::side;
        sc.component = side_plus ? 1 : -1;
    } else if (both) {
        sc.verdict = SideVerdict::bi_side;
    } else {
        sc.verdict = SideVerdict::inconclusive;
    }
    return sc;
}

} // namespace shadowlab

#endif
