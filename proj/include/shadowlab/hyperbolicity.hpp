// Finite-time growth rates along an orbit segment: singular log-rates of
// DX_t, area growth of a central 2-plane and its domination over the stable
// direction. These are numerical surrogates, not certificates of hyperbolicity.

#ifndef SHADOWLAB_HYPERBOLICITY_HPP
#define SHADOWLAB_HYPERBOLICITY_HPP

#include "flow.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace shadowlab {

/// Area of the parallelogram spanned by u and v.
inline double two_norm(const Vec3& u, const Vec3& v)
{
    double g = u.squaredNorm() * v.squaredNorm() - u.dot(v) * u.dot(v);
    return std::sqrt(std::max(0.0, g));
}

struct GrowthReport {
    Vec3 base = Vec3::Zero();
    double horizon = 0.0;
    double renorm = 0.5;
    std::array<double, 3> log_rates{}; // singular log-rates of DX_t, descending
    double area_rate = 0.0;            // log-area growth of the central plane / t
    double stable_rate = 0.0;          // normal growth (log|det| - log area) / t
    double domination_gap = 0.0;       // min over sample times of (central min - stable) / t
    double flow_rate = 0.0;            // log(|X(x_t)| / |X(x)|) / t
    double flow_plane_angle_deg = 0.0; // angle of X(x) to the central plane
    Vec3 stable = Vec3::Zero();
    std::array<Vec3, 2> plane{Vec3::Zero(), Vec3::Zero()};
    int sweeps = 0; // forward/backward QR sweeps used for the singular rates
};

struct GrowthOptions {
    double renorm = 0.5;
    int max_sweeps = 60;
    double sweep_tol = 1e-13; // change of the summed log-rates between sweeps
    double collapse = 1e-300; // smallest admissible frame norm or area
    FlowOptions flow;
    FrameOptions frame;
};

namespace detail {

/// DX over consecutive intervals of length renorm (the last may be shorter).
struct IntervalJacobians {
    std::vector<Mat3> blocks;
    std::vector<double> ends;
    Trajectory orbit;
};

inline IntervalJacobians interval_jacobians(const VectorField& field, const Vec3& x, double horizon,
                                            const GrowthOptions& opt)
{
    if (!(horizon > 0.0)) throw DomainError("growth horizon must be positive");
    if (!(opt.renorm > 0.0)) throw DomainError("renormalization interval must be positive");
    IntervalJacobians out;
    out.orbit = integrate(field, x, horizon, opt.flow);
    double t = 0.0;
    while (t < horizon) {
        double e = std::min(horizon, t + opt.renorm);
        if (horizon - e < 1e-9 * horizon) e = horizon;
        auto fr = propagate_frame(field, out.orbit, {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()}, t, e,
                                  opt.frame);
        Mat3 M;
        for (int i = 0; i < 3; ++i) M.col(i) = fr.vector(i, e);
        out.blocks.push_back(M);
        out.ends.push_back(e);
        t = e;
    }
    return out;
}

/// QR with non-negative diagonal.
inline void positive_qr(const Mat3& Y, Mat3& Q, Mat3& R)
{
    Eigen::HouseholderQR<Mat3> qr(Y);
    Q = qr.householderQ();
    R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < 3; ++i) {
        if (R(i, i) < 0) {
            R.row(i) *= -1.0;
            Q.col(i) *= -1.0;
        }
    }
}

} // namespace detail

/// Singular log-rates of the product of blocks by alternating forward and
/// backward QR sweeps; `right` returns the right singular vectors.
inline std::array<double, 3> product_singular_logs(const std::vector<Mat3>& blocks, Mat3& right,
                                                   int& sweeps, const GrowthOptions& opt = {})
{
    // Generic start: an axis-aligned frame never leaves invariant coordinate
    // planes of a diagonal field.
    Mat3 V, R, seed;
    seed << 1.0, 2.0, 3.0, -2.0, 1.0, 1.0, 0.5, -1.0, 2.0;
    detail::positive_qr(seed, V, R);
    auto forward = [&](const Mat3& start) {
        std::array<double, 3> logs{};
        Mat3 Q = start;
        for (const auto& M : blocks) {
            detail::positive_qr(M * Q, Q, R);
            for (int i = 0; i < 3; ++i) {
                if (!(R(i, i) > opt.collapse)) throw FrameCollapseError(0.0, R(i, i));
                logs[i] += std::log(R(i, i));
            }
        }
        return std::make_pair(logs, Q);
    };
    std::array<double, 3> logs{};
    sweeps = 0;
    for (int it = 0; it < opt.max_sweeps; ++it) {
        ++sweeps;
        auto [l, Q] = forward(V);
        Mat3 U = Q;
        for (auto k = blocks.size(); k-- > 0;) detail::positive_qr(blocks[k].transpose() * U, U, R);
        V = U;
        double change = 0.0;
        for (int i = 0; i < 3; ++i) change = std::max(change, std::abs(l[i] - logs[i]));
        logs = l;
        if (it > 0 && change <= opt.sweep_tol * std::max(1.0, std::abs(l[0]) + std::abs(l[2]))) break;
    }
    logs = forward(V).first;
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return logs[a] > logs[b]; });
    std::array<double, 3> sorted{};
    for (int i = 0; i < 3; ++i) {
        right.col(i) = V.col(order[i]);
        sorted[i] = logs[order[i]];
    }
    return sorted;
}

/// Growth of DX_t along X_[0,t](x). With no plane given, the stable estimate
/// is the least right singular vector of DX_t and the central plane its
/// orthogonal complement; a given plane uses its normal as the stable estimate.
inline GrowthReport sectional_growth(const VectorField& field, const Vec3& x, double horizon,
                                     const GrowthOptions& opt = {},
                                     std::optional<std::array<Vec3, 2>> plane = std::nullopt)
{
    auto ij = detail::interval_jacobians(field, x, horizon, opt);
    GrowthReport rep;
    rep.base = x;
    rep.horizon = horizon;
    rep.renorm = opt.renorm;

    Mat3 V;
    auto logs = product_singular_logs(ij.blocks, V, rep.sweeps, opt);
    for (int i = 0; i < 3; ++i) rep.log_rates[i] = logs[i] / horizon;
    std::sort(rep.log_rates.begin(), rep.log_rates.end(), std::greater<>());

    Vec3 u, w, s;
    if (plane) {
        u = (*plane)[0].normalized();
        w = ((*plane)[1] - (*plane)[1].dot(u) * u);
        if (!(w.norm() > 1e-12 * (*plane)[1].norm())) throw DomainError("central plane is degenerate");
        w.normalize();
        s = u.cross(w);
    } else {
        u = V.col(0);
        w = V.col(1);
        s = V.col(2);
    }
    rep.plane = {u, w};
    rep.stable = s;
    Vec3 X0 = field(x);
    if (X0.norm() > 0) {
        double out_of_plane = std::abs(X0.normalized().dot(s));
        rep.flow_plane_angle_deg = std::asin(std::min(1.0, out_of_plane)) * 180.0 / M_PI;
    }

    // Gram-Schmidt transport of (u, w) with the 2x2 coefficient product kept
    // as scale * C. The stable growth is the normal one, log|det| - log area;
    // transporting the stable vector itself would drift to the unstable
    // direction.
    double log_area = 0.0, log_det = 0.0, log_scale = 0.0;
    Eigen::Matrix2d C = Eigen::Matrix2d::Identity();
    rep.domination_gap = kInf;
    for (std::size_t k = 0; k < ij.blocks.size(); ++k) {
        const Mat3& M = ij.blocks[k];
        Vec3 a = M * u, b = M * w;
        double area = two_norm(a, b);
        double na = a.norm();
        double det = std::abs(M.determinant());
        if (!(area > opt.collapse) || !(na > opt.collapse) || !(det > opt.collapse) ||
            !std::isfinite(area)) {
            throw FrameCollapseError(ij.ends[k], area);
        }
        log_area += std::log(area);
        log_det += std::log(det);
        Eigen::Matrix2d R;
        u = a / na;
        double r01 = u.dot(b);
        Vec3 bw = b - r01 * u;
        R << na, r01, 0.0, bw.norm();
        w = bw / bw.norm();
        C = R * C;
        double m = C.cwiseAbs().maxCoeff();
        C /= m;
        log_scale += std::log(m);

        Eigen::JacobiSVD<Eigen::Matrix2d> svd(C);
        double log_max = log_scale + std::log(svd.singularValues()[0]);
        double central_min = log_area - log_max;
        double gap = (central_min - (log_det - log_area)) / ij.ends[k];
        rep.domination_gap = std::min(rep.domination_gap, gap);
    }
    const double log_stable = log_det - log_area;
    rep.area_rate = log_area / horizon;
    rep.stable_rate = log_stable / horizon;
    Vec3 Xt = field(ij.orbit.end_state());
    if (X0.norm() > 0 && Xt.norm() > 0) rep.flow_rate = std::log(Xt.norm() / X0.norm()) / horizon;
    return rep;
}

/// Time in [t_min, t_max] at which the orbit of x comes closest back to x;
/// probe segments of that length are close to periodic.
inline double near_return_horizon(const VectorField& field, const Vec3& x, double t_min,
                                  double t_max, const FlowOptions& flow = {})
{
    auto orbit = integrate(field, x, t_max, flow);
    double best_t = t_max, best = kInf;
    const auto& ts = orbit.node_times();
    for (std::size_t n = 0; n < ts.size(); ++n) {
        if (ts[n] < t_min) continue;
        double d = distance(orbit.node_states()[n], x);
        if (d < best) {
            best = d;
            best_t = ts[n];
        }
    }
    return best_t;
}

/// Singular rates along a segment kept outside B_r of every singularity.
inline GrowthReport hyperbolicity_probe(const VectorField& field, const Vec3& x, double horizon,
                                        double r, const GrowthOptions& opt = {})
{
    auto orbit = integrate(field, x, horizon, opt.flow);
    for (const auto& q : field.singularities) {
        double closest = kInf;
        const auto& ts = orbit.node_times();
        for (std::size_t n = 0; n + 1 < ts.size(); ++n) {
            // Nodes plus midpoints of the dense output.
            closest = std::min(closest, distance(orbit.at(ts[n]), q));
            closest = std::min(closest, distance(orbit.at(0.5 * (ts[n] + ts[n + 1])), q));
        }
        closest = std::min(closest, distance(orbit.end_state(), q));
        if (closest < r) {
            throw DomainError("probe segment enters B_" + std::to_string(r) + " of a singularity (closest " +
                              std::to_string(closest) + ")");
        }
    }
    return sectional_growth(field, x, horizon, opt);
}

} // namespace shadowlab

#endif
