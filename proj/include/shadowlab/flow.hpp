// Numerical realization of the flow X_t of a vector field on R^3: dense
// trajectories, the flow map, and tangent frames carried by DX_t.

#ifndef SHADOWLAB_FLOW_HPP
#define SHADOWLAB_FLOW_HPP

#include "core.hpp"
#include "ode.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace shadowlab {

struct Box {
    Vec3 lo = Vec3::Constant(-1.0);
    Vec3 hi = Vec3::Constant(1.0);
};

/// A named smooth vector field with analytic Jacobian and the zeros known in
/// closed form.
struct VectorField {
    std::string name;
    std::vector<double> params;
    std::function<Vec3(const Vec3&)> eval;
    std::function<Mat3(const Vec3&)> jacobian;
    std::vector<Vec3> singularities;
    /// Region where the Jacobian cross-check is run.
    Box check_box;

    Vec3 operator()(const Vec3& x) const { return eval(x); }

    /// The time-reversed field -X (same singularities).
    VectorField reversed() const
    {
        VectorField r = *this;
        auto f = eval;
        auto j = jacobian;
        r.name = name + "-reversed";
        r.eval = [f](const Vec3& x) -> Vec3 { return -f(x); };
        r.jacobian = [j](const Vec3& x) -> Mat3 { return -j(x); };
        return r;
    }
};

struct FlowOptions {
    Tolerance tol{1e-9, 1e-9};
    double escape_radius = 1e4;
    double max_step = 0.1;
    /// Steps are capped so that h*|X(x)| <= kappa * min(dist to nearest
    /// singularity, far_length).
    double kappa = 0.1;
    double far_length = 10.0;
};

/// Densely sampled solution x(t) = X_t(x0) on [0, T].
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(DenseTrajectory<3> dense, Tolerance tol) : dense_(std::move(dense)), tol_(tol) {}

    const Vec3& x0() const { return dense_.front(); }
    double duration() const { return dense_.t_end(); }
    const Tolerance& tolerance() const { return tol_; }
    const std::vector<double>& node_times() const { return dense_.times(); }
    const std::vector<Vec3>& node_states() const { return dense_.states(); }
    const DenseTrajectory<3>& dense() const { return dense_; }
    static constexpr int interpolation_order = 4;

    Vec3 at(double t) const { return dense_.at(t); }
    Vec3 end_state() const { return dense_.back(); }

private:
    DenseTrajectory<3> dense_;
    Tolerance tol_;
};

namespace detail {

inline IntegratorOptions<3> state_options(const VectorField& field, const FlowOptions& opt)
{
    IntegratorOptions<3> io;
    io.tol = opt.tol;
    io.max_step = opt.max_step;
    const double kappa = opt.kappa;
    const double far = opt.far_length;
    auto sing = field.singularities;
    auto f = field.eval;
    io.step_cap = [sing, f, kappa, far](const Vec3& x) {
        double r = far;
        for (const auto& q : sing) r = std::min(r, distance(x, q));
        double speed = f(x).norm();
        if (speed <= 0.0) return kInf;
        return kappa * r / speed;
    };
    const double radius = opt.escape_radius;
    io.escaped = [radius](const Vec3& x) { return !is_finite(x) || x.norm() > radius; };
    return io;
}

} // namespace detail

struct PartialTrajectory {
    Trajectory trajectory;
    bool escaped = false;
};

/// Integrates up to T, truncating at escape instead of throwing.
inline PartialTrajectory integrate_until_escape(const VectorField& field, const Vec3& x0,
                                                double T, const FlowOptions& opt = {})
{
    if (!(T >= 0.0)) throw DomainError("integration time must be non-negative");
    if (!is_finite(x0)) throw DomainError("initial state is not finite");
    DenseTrajectory<3> dense;
    auto rhs = [&field](double, const Vec3& x) { return field.eval(x); };
    auto status = integrate_dopri5<3>(rhs, 0.0, x0, T, detail::state_options(field, opt), dense);
    return {Trajectory(std::move(dense), opt.tol), status.escaped};
}

/// Trajectory of x0 on [0, T]. Throws EscapedError if the state leaves the
/// escape ball.
inline Trajectory integrate(const VectorField& field, const Vec3& x0, double T,
                            const FlowOptions& opt = {})
{
    auto part = integrate_until_escape(field, x0, T, opt);
    if (part.escaped) {
        throw EscapedError(part.trajectory.duration(), part.trajectory.end_state());
    }
    return std::move(part.trajectory);
}

inline Vec3 flow_at(const Trajectory& traj, double t) { return traj.at(t); }

/// X_t(x) for t of either sign.
inline Vec3 flow_map(const VectorField& field, const Vec3& x, double t,
                     const FlowOptions& opt = {})
{
    if (t >= 0.0) return integrate(field, x, t, opt).end_state();
    return integrate(field.reversed(), x, -t, opt).end_state();
}

/// k tangent vectors transported by the variational equation along a base
/// trajectory.
class TangentFrame {
public:
    TangentFrame() = default;
    TangentFrame(int k, DenseTrajectory<9> dense) : k_(k), dense_(std::move(dense)) {}

    int size() const { return k_; }
    double t_begin() const { return dense_.t_begin(); }
    double t_end() const { return dense_.t_end(); }
    const std::vector<double>& node_times() const { return dense_.times(); }

    Vec3 vector(int i, double t) const
    {
        auto s = dense_.at(t);
        return s.segment<3>(3 * i);
    }
    std::vector<Vec3> vectors(double t) const
    {
        auto s = dense_.at(t);
        std::vector<Vec3> out;
        for (int i = 0; i < k_; ++i) out.push_back(s.segment<3>(3 * i));
        return out;
    }
    std::vector<Vec3> final_vectors() const { return vectors(t_end()); }

private:
    int k_ = 0;
    DenseTrajectory<9> dense_;
};

struct FrameOptions {
    Tolerance tol{1e-10, 1e-10};
    double max_step = 0.05;
    /// Sine of the angle between the two vectors of a 2-frame below which the
    /// frame is declared collapsed.
    double collapse_threshold = 1e-10;
};

/// Transports the initial vectors (1 to 3) along traj over [t_start, t_end]
/// with v' = J(x(t)) v.
inline TangentFrame propagate_frame(const VectorField& field, const Trajectory& traj,
                                    const std::vector<Vec3>& initial, double t_start,
                                    double t_end, const FrameOptions& opt = {})
{
    const int k = static_cast<int>(initial.size());
    if (k < 1 || k > 3) throw DomainError("frame must have 1 to 3 vectors");
    if (k >= 2) {
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j) {
                double s = initial[i].cross(initial[j]).norm() /
                           (initial[i].norm() * initial[j].norm());
                if (!(s > opt.collapse_threshold)) {
                    throw DomainError("initial frame vectors are not linearly independent");
                }
            }
    }
    Eigen::Matrix<double, 9, 1> s0 = Eigen::Matrix<double, 9, 1>::Zero();
    for (int i = 0; i < k; ++i) s0.segment<3>(3 * i) = initial[i];

    auto rhs = [&](double t, const Eigen::Matrix<double, 9, 1>& s) {
        Mat3 J = field.jacobian(traj.at(std::clamp(t, traj.dense().t_begin(), traj.duration())));
        Eigen::Matrix<double, 9, 1> ds = Eigen::Matrix<double, 9, 1>::Zero();
        for (int i = 0; i < k; ++i) ds.segment<3>(3 * i) = J * s.segment<3>(3 * i);
        return ds;
    };
    IntegratorOptions<9> io;
    io.tol = opt.tol;
    io.max_step = opt.max_step;
    DenseTrajectory<9> dense;
    integrate_dopri5<9>(rhs, t_start, s0, t_end, io, dense);

    if (k == 2) {
        for (std::size_t n = 0; n < dense.node_count(); ++n) {
            Vec3 a = dense.states()[n].segment<3>(0);
            Vec3 b = dense.states()[n].segment<3>(3);
            double s = a.cross(b).norm() / (a.norm() * b.norm());
            if (!(s > opt.collapse_threshold)) throw FrameCollapseError(dense.times()[n], s);
        }
    }
    return TangentFrame(k, std::move(dense));
}

inline TangentFrame propagate_frame(const VectorField& field, const Trajectory& traj,
                                    const std::vector<Vec3>& initial,
                                    const FrameOptions& opt = {})
{
    return propagate_frame(field, traj, initial, 0.0, traj.duration(), opt);
}

/// Transports vectors backward in time along traj, from t_end down to
/// t_start: returns DX_{-(t_end - t_start)} applied at x(t_end).
inline std::vector<Vec3> propagate_backward(const VectorField& field, const Trajectory& traj,
                                            const std::vector<Vec3>& at_end, double t_start,
                                            double t_end, const FrameOptions& opt = {})
{
    const int k = static_cast<int>(at_end.size());
    Eigen::Matrix<double, 9, 1> s0 = Eigen::Matrix<double, 9, 1>::Zero();
    for (int i = 0; i < k; ++i) s0.segment<3>(3 * i) = at_end[i];
    // Reverse time: u(r) = v(t_end - r), du/dr = -J(x(t_end - r)) u.
    auto rhs = [&](double r, const Eigen::Matrix<double, 9, 1>& s) {
        double t = std::clamp(t_end - r, t_start, t_end);
        Mat3 J = -field.jacobian(traj.at(t));
        Eigen::Matrix<double, 9, 1> ds = Eigen::Matrix<double, 9, 1>::Zero();
        for (int i = 0; i < k; ++i) ds.segment<3>(3 * i) = J * s.segment<3>(3 * i);
        return ds;
    };
    IntegratorOptions<9> io;
    io.tol = opt.tol;
    io.max_step = opt.max_step;
    DenseTrajectory<9> dense;
    integrate_dopri5<9>(rhs, 0.0, s0, t_end - t_start, io, dense);
    std::vector<Vec3> out;
    for (int i = 0; i < k; ++i) out.push_back(dense.back().segment<3>(3 * i));
    return out;
}

/// Central-difference Jacobian of the field, used to audit analytic ones.
inline Mat3 finite_difference_jacobian(const VectorField& field, const Vec3& x, double h = 1e-6)
{
    Mat3 J;
    for (int j = 0; j < 3; ++j) {
        Vec3 dx = Vec3::Zero();
        double hj = h * std::max(1.0, std::abs(x[j]));
        dx[j] = hj;
        J.col(j) = (field.eval(x + dx) - field.eval(x - dx)) / (2 * hj);
    }
    return J;
}

} // namespace shadowlab

#endif
