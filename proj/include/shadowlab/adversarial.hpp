// Adversarial chains near a Lorenz-like singularity: follow a true orbit into
// a small ball around sigma, jump onto the requested unstable branch and ride
// it out to that branch's landmark.

#ifndef SHADOWLAB_ADVERSARIAL_HPP
#define SHADOWLAB_ADVERSARIAL_HPP

#include "chain.hpp"
#include "section.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace shadowlab {

// ---------------------------------------------------------------------------
// Aiming at the stable manifold of sigma.

namespace detail {

/// Eigen-frame of a saddle with one unstable direction, without the
/// Lorenz-like ordering check.
inline SingularFrame loose_frame(const VectorField& field, const Vec3& sigma)
{
    auto spec = real_spectrum(field, sigma);
    if (!(spec[0].value > 0 && spec[1].value < 0)) {
        throw GeometryError("singularity is not a saddle with one unstable direction", sigma);
    }
    SingularFrame f;
    f.saddle = {sigma,          spec[0].value,  spec[1].value, spec[2].value,
                spec[0].vector, spec[1].vector, spec[2].vector};
    f.unstable = canonical_direction(spec[0].vector);
    f.weak = canonical_direction(spec[1].vector);
    f.strong = canonical_direction(spec[2].vector);
    Mat3 B;
    B << f.unstable, f.weak, f.strong;
    f.to_coords = B.inverse();
    return f;
}

/// Leading right singular vector of DX_h(y).
inline Vec3 expanding_direction(const VectorField& field, const Vec3& y, double h,
                                const FlowOptions& flow = {})
{
    auto tr = integrate(field, y, h, flow);
    auto fr = propagate_frame(field, tr, {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()});
    auto v = fr.final_vectors();
    Mat3 M;
    M << v[0], v[1], v[2];
    Eigen::JacobiSVD<Mat3> svd(M, Eigen::ComputeFullV);
    return canonical_direction(svd.matrixV().col(0));
}

} // namespace detail

/// Symbols of an orbit: sign of the unstable coordinate at each local
/// maximum of the weak coordinate (one per loop for Lorenz, where the sign is
/// the wing). Maxima before `skip` are ignored so that a start at a maximum
/// does not flicker.
inline std::vector<int> itinerary(const VectorField& field, const SingularFrame& frame,
                                  const Vec3& x, double horizon, const FlowOptions& flow = {},
                                  double skip = 0.2)
{
    auto tr = integrate_until_escape(field, x, horizon, flow).trajectory;
    std::vector<int> out;
    const auto& s = tr.node_states();
    for (std::size_t j = 1; j + 1 < s.size(); ++j) {
        if (tr.node_times()[j] < skip) continue;
        Vec3 a = frame.coords(s[j - 1]), b = frame.coords(s[j]), c = frame.coords(s[j + 1]);
        if (b[1] > a[1] && b[1] >= c[1]) out.push_back(b[0] > 0 ? 1 : -1);
    }
    return out;
}

struct AimOptions {
    double eta = 1e-6;   // search offsets s in [0, eta]
    double horizon = 40.0;
    double linger = 20.0; // extra time for orbits that stall near sigma
};

struct AimResult {
    Vec3 point = Vec3::Zero(); // p + offset * direction
    double offset = 0.0;
    double bracket = kInf;     // final width of the offset bracket
    std::size_t symbol = 0;    // index of the symbol that flips across the bracket
    bool bracketed = false;
};

/// Bisects s in [0, eta] for a point p + s * direction whose orbit passes
/// through the stable manifold of sigma: the bracket ends keep itineraries
/// that agree up to one symbol and carry opposite signs there. Runs to
/// floating point resolution.
inline AimResult aim_at_stable_manifold(const VectorField& field, const SingularFrame& frame,
                                        const Vec3& p, const Vec3& direction,
                                        const AimOptions& opt = {}, const FlowOptions& flow = {})
{
    const Vec3 n = direction.normalized();
    auto it = [&](double s, std::size_t need) {
        auto I = itinerary(field, frame, p + s * n, opt.horizon, flow);
        if (I.size() < need) I = itinerary(field, frame, p + s * n, opt.horizon + opt.linger, flow);
        return I;
    };
    // First index where both have a symbol and the symbols differ.
    auto flip = [](const std::vector<int>& a, const std::vector<int>& b) -> std::size_t {
        std::size_t m = std::min(a.size(), b.size());
        for (std::size_t k = 0; k < m; ++k)
            if (a[k] != b[k]) return k;
        return std::string::npos;
    };
    double lo = 0.0, hi = opt.eta;
    auto I_lo = it(lo, 0), I_hi = it(hi, 0);
    std::size_t k = flip(I_lo, I_hi);
    AimResult res;
    res.point = p;
    if (k == std::string::npos) return res;
    res.bracketed = true;
    for (;;) {
        double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi)) break;
        if ((p + mid * n) == (p + lo * n) || (p + mid * n) == (p + hi * n)) break;
        auto I_mid = it(mid, k + 1);
        if (I_mid.size() <= k) {
            // Still stalled near sigma: as close as this horizon can tell.
            lo = mid;
            break;
        }
        if (flip(I_lo, I_mid) > k || flip(I_lo, I_mid) == std::string::npos) {
            lo = mid;
            I_lo = std::move(I_mid);
        } else {
            hi = mid;
            I_hi = std::move(I_mid);
        }
        std::size_t k2 = flip(I_lo, I_hi);
        if (k2 == std::string::npos) break;
        k = k2;
    }
    res.offset = lo;
    res.point = p + lo * n;
    res.bracket = hi - lo;
    res.symbol = k;
    return res;
}

struct ApproachOptions {
    double budget = 1e3;       // time allowed to reach sigma
    double first_horizon = 20; // doubled until the approach is found
    double corridor_top = 1.0; // highest junction allowed on the weak stable axis
    int substeps = 8;
    bool steer = true;
    double steer_horizon = 10.0;    // itinerary horizon of a steering aim
    double expansion_horizon = 1.0; // finite-time expanding direction to steer along
};

/// Legs carrying x into B_{delta/4}(sigma). The natural orbit of x is
/// followed until one of:
///   - it enters the ball (one leg);
///   - it passes within delta/4 of the weak stable axis at a height where a
///     leg down the axis lasts at least T (two legs; the axis is invariant for
///     symmetric fields such as Lorenz, elsewhere validation tells);
///   - at a maximum of the weak coordinate, the stable manifold of sigma lies
///     within delta/4 along the locally expanding direction: a jump of at most
///     delta/4 lands on it to floating point resolution and the search
///     continues from there without further steering.
struct ApproachLegs {
    std::vector<Vec3> points;
    std::vector<double> durations;
    Vec3 end = Vec3::Zero();            // X_{t_last}(last point)
    Vec3 natural_point = Vec3::Zero();  // natural orbit at the last approach junction
    double closest = kInf;              // distance of the final approach to sigma
    bool corrected = false;             // weak-axis leg used
    bool steered = false;
    double steer_jump = 0.0;
};

/// Throws NotSingularApproachError when the orbit escapes or the budget runs
/// out.
inline ApproachLegs approach_singularity(const VectorField& field, const Vec3& x,
                                         const Vec3& sigma, double delta, double T,
                                         const ApproachOptions& opt = {},
                                         const FlowOptions& flow = {})
{
    if (!(delta > 0.0) || !(T > 0.0)) throw DomainError("approach needs delta > 0 and T > 0");
    const double target = delta / 4.0;
    const SingularFrame frame = detail::loose_frame(field, sigma);
    const Vec3 axis = frame.weak;
    const double rate = frame.saddle.weak_rate;
    const double h_min = std::max(target * std::exp(-rate * T), 2.0 * target);
    std::vector<double> failed_steers;

    auto try_steer = [&](const Vec3& y0) -> std::optional<ApproachLegs> {
        Vec3 v = detail::expanding_direction(field, y0, opt.expansion_horizon, flow);
        for (double sgn : {1.0, -1.0}) {
            auto aim = aim_at_stable_manifold(field, frame, y0, sgn * v, {target, opt.steer_horizon},
                                              flow);
            if (!aim.bracketed) continue;
            ApproachOptions sub = opt;
            sub.steer = false;
            sub.budget = sub.first_horizon = opt.steer_horizon + T;
            try {
                auto legs = approach_singularity(field, aim.point, sigma, delta, T, sub, flow);
                legs.steered = true;
                legs.steer_jump = aim.offset;
                return legs;
            } catch (const NotSingularApproachError&) {
            }
        }
        return std::nullopt;
    };

    for (double horizon = std::min(opt.first_horizon, opt.budget);;
         horizon = std::min(2.0 * horizon, opt.budget)) {
        // One-shot integration so the chain's own segment reproduces it.
        auto part = integrate_until_escape(field, x, horizon, flow);
        const Trajectory& tr = part.trajectory;
        const auto& times = tr.node_times();
        const auto& states = tr.node_states();

        ApproachLegs out;
        double best_t = -1.0, best_d = kInf;
        std::optional<double> corr_t;
        double corr_h = 0.0, corr_window = 0.0;
        bool done = false;
        for (std::size_t j = 0; j + 1 < times.size() && !done; ++j) {
            if (opt.steer && best_t < 0.0 && !corr_t && j >= 1 && times[j] >= T) {
                double w0 = frame.coords(states[j - 1])[1], w1 = frame.coords(states[j])[1],
                       w2 = frame.coords(states[j + 1])[1];
                bool peak = w1 > w0 && w1 >= w2;
                if (peak && std::find(failed_steers.begin(), failed_steers.end(), times[j]) ==
                                failed_steers.end()) {
                    if (auto legs = try_steer(states[j])) {
                        legs->points.insert(legs->points.begin(), x);
                        legs->durations.insert(legs->durations.begin(), times[j]);
                        return *legs;
                    }
                    failed_steers.push_back(times[j]);
                }
            }
            for (int k = 0; k < opt.substeps && !done; ++k) {
                double t = times[j] + (times[j + 1] - times[j]) * k / opt.substeps;
                Vec3 z = tr.at(t);
                double d = distance(z, sigma);
                if (t < T) continue;
                if (best_t >= 0.0) {
                    // Inside the ball: walk to the closest approach.
                    if (d < best_d) {
                        best_d = d;
                        best_t = t;
                    } else {
                        done = true;
                    }
                    continue;
                }
                if (d <= target) {
                    best_t = t;
                    best_d = d;
                    continue;
                }
                if (!corr_t) {
                    double h = (z - sigma).dot(axis);
                    double perp = (z - sigma - h * axis).norm();
                    if (h >= h_min && h <= opt.corridor_top && perp <= target) {
                        corr_t = t;
                        corr_h = h;
                        corr_window = std::log(h / target) / -rate + 1.0;
                    }
                } else {
                    out.closest = std::min(out.closest, d);
                    if (t > *corr_t + corr_window) done = true;
                }
            }
        }
        if (best_t >= 0.0) {
            out.points = {x};
            out.durations = {best_t};
            out.natural_point = tr.at(best_t);
            out.closest = best_d;
            out.end = integrate(field, x, best_t, flow).end_state();
            return out;
        }
        bool exhausted = part.escaped || horizon >= opt.budget;
        if (corr_t && (done || exhausted)) {
            Vec3 a = sigma + corr_h * axis;
            double tb = std::log(corr_h / target) / -rate;
            out.points = {x, a};
            out.durations = {*corr_t, tb};
            out.natural_point = tr.at(*corr_t);
            out.end = integrate(field, a, tb, flow).end_state();
            out.corrected = true;
            return out;
        }
        if (part.escaped) {
            throw NotSingularApproachError("orbit escaped at t = " + std::to_string(tr.duration()) +
                                           " without approaching the singularity");
        }
        if (horizon >= opt.budget) {
            throw NotSingularApproachError("orbit did not approach the singularity within " +
                                           std::to_string(opt.budget));
        }
    }
}

/// Final leg: from a point on the requested unstable branch near sigma to
/// the closest approach to that branch's landmark.
struct LandmarkLeg {
    Vec3 start = Vec3::Zero();
    double duration = 0.0;
    double start_radius = 0.0; // arclength from sigma along the branch
    double miss = kInf;        // d(X_duration(start), landmark)
};

inline LandmarkLeg landmark_leg(const VectorField& field, const UnstableBranches& ub, int side,
                                double radius, double T, const FlowOptions& flow = {})
{
    const BranchCurve& b = ub.branch(side);
    const Vec3& y = ub.landmark(side);
    if (b.points.size() < 2) throw GeometryError("unstable branch is not sampled", ub.sigma);
    auto rates = real_spectrum(field, ub.sigma);
    const double expansion = rates.front().value;

    LandmarkLeg leg;
    double r = std::min(radius, 0.5 * b.length());
    for (int attempt = 0; attempt < 20; ++attempt) {
        leg.start = b.at_arclength(r);
        leg.start_radius = r;
        double horizon = std::log(std::max(2.0, y.norm() * 4.0) / r) / expansion + 2.0;
        auto tr = integrate_until_escape(field, leg.start, horizon, flow).trajectory;
        const auto& times = tr.node_times();
        // First local minimum of the distance once inside B_beta(y), else the
        // global minimum.
        double best_t = 0.0, best_d = kInf;
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < times.size(); ++j) {
            double d = distance(tr.node_states()[j], y);
            if (d < best_d) {
                best_d = d;
                best_t = times[j];
                best_j = j;
            } else if (best_d < ub.beta && d > best_d) {
                break;
            }
        }
        // Golden-section refinement on the neighbouring node interval.
        double lo = times[best_j == 0 ? 0 : best_j - 1];
        double hi = times[std::min(best_j + 1, times.size() - 1)];
        auto dist = [&](double t) { return distance(tr.at(t), y); };
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
        for (int it = 0; it < 100 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
            if (dist(c) < dist(d)) {
                hi = d;
            } else {
                lo = c;
            }
            c = hi - g * (hi - lo);
            d = lo + g * (hi - lo);
        }
        double t = 0.5 * (lo + hi);
        if (dist(t) < best_d) best_t = t;
        leg.duration = best_t;
        if (leg.duration >= T) break;
        // Start closer to sigma so the ride lasts at least T.
        r *= std::exp(-expansion * (T - leg.duration)) * 0.9;
    }
    if (!(leg.duration >= T)) throw GeometryError("landmark leg shorter than T", leg.start);
    leg.miss = distance(integrate(field, leg.start, leg.duration, flow).end_state(), y);
    return leg;
}

struct AdversarialChain {
    FiniteChain chain;
    int branch = 0;
    bool corrected = false;      // approach used the weak-axis correction leg
    bool steered = false;        // approach used a steering jump
    double steer_jump = 0.0;
    double approach_closest = 0; // final approach distance to sigma (corrected: natural orbit)
    Vec3 natural_point = Vec3::Zero();
    double landmark_miss = kInf;
    double branch_radius = 0.0;  // distance of the branch point from sigma
};

/// {(p, t_0), (x_1, t_1)}: p's orbit enters B_{delta/4}(sigma), x_1 is on the
/// requested branch within delta/4 of sigma and X_{t_1}(x_1) is that branch's
/// landmark. When p's orbit does not enter the ball by itself, the steering
/// and weak-axis legs of approach_singularity come in between; every jump
/// stays <= delta/2.
inline AdversarialChain build_adversarial_chain(const VectorField& field, const Vec3& p,
                                                const UnstableBranches& ub, int branch,
                                                double delta, double T,
                                                const ApproachOptions& opt = {},
                                                const FlowOptions& flow = {})
{
    if (branch != 1 && branch != -1) throw DomainError("branch must be +1 (r) or -1 (l)");
    auto legs = approach_singularity(field, p, ub.sigma, delta, T, opt, flow);
    auto leg = landmark_leg(field, ub, branch, delta / 4.0, T, flow);
    auto points = legs.points;
    auto durations = legs.durations;
    points.push_back(leg.start);
    durations.push_back(leg.duration);
    return {FiniteChain(field, std::move(points), std::move(durations), delta, T, flow,
                        {0, "adversarial"}),
            branch,
            legs.corrected,
            legs.steered,
            legs.steer_jump,
            legs.closest,
            legs.natural_point,
            leg.miss,
            leg.start_radius};
}

/// {(p, t_0), (x_1, t_1), (x_2, t_2)}: x_1 is a point near q = X_{t_0}(p)
/// whose orbit reaches sigma, x_2 starts on the branch opposite to x_1's
/// natural exit and X_{t_2}(x_2) is that branch's landmark. The first junction
/// is not checked here; validate_chain reports it.
inline AdversarialChain build_three_leg_chain(const VectorField& field, const Vec3& p, double t0,
                                              const Vec3& x1, const SingularFrame& frame,
                                              const UnstableBranches& ub, double delta, double T,
                                              const ApproachOptions& opt = {},
                                              const FlowOptions& flow = {})
{
    if (!(t0 >= T)) throw DomainError("t0 must be at least T");
    auto legs = approach_singularity(field, x1, ub.sigma, delta, T, opt, flow);
    int exit = exit_branch(field, frame, legs.natural_point, 1.0, 20.0, flow);
    if (exit == 0) throw GeometryError("exit branch of x1 undecided", x1);
    int branch = -exit;
    auto leg = landmark_leg(field, ub, branch, delta / 4.0, T, flow);
    std::vector<Vec3> points{p};
    std::vector<double> durations{t0};
    points.insert(points.end(), legs.points.begin(), legs.points.end());
    durations.insert(durations.end(), legs.durations.begin(), legs.durations.end());
    points.push_back(leg.start);
    durations.push_back(leg.duration);
    return {FiniteChain(field, std::move(points), std::move(durations), delta, T, flow,
                        {0, "three-leg"}),
            branch,
            legs.corrected,
            legs.steered,
            legs.steer_jump,
            legs.closest,
            legs.natural_point,
            leg.miss,
            leg.start_radius};
}

} // namespace shadowlab

#endif
