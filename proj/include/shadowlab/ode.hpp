// Dormand-Prince 5(4) integrator with the fourth-order continuous extension,
// plus the dense trajectory container it fills.

#ifndef SHADOWLAB_ODE_HPP
#define SHADOWLAB_ODE_HPP

#include "core.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <optional>
#include <vector>

namespace shadowlab {

struct Tolerance {
    double abs = 1e-9;
    double rel = 1e-9;

    Tolerance scaled(double factor) const { return {abs * factor, rel * factor}; }
    /// Error target for a state of the given magnitude.
    double target(double magnitude) const { return abs + rel * magnitude; }
};

/// Piecewise dense solution of an ODE in R^Dim. Node times are strictly
/// increasing; between nodes the Dormand-Prince interpolant is used.
template <int Dim>
class DenseTrajectory {
public:
    using State = Eigen::Matrix<double, Dim, 1>;

    DenseTrajectory() = default;
    DenseTrajectory(double t0, const State& x0) : times_{t0}, states_{x0} {}

    double t_begin() const { return times_.front(); }
    double t_end() const { return times_.back(); }
    std::size_t node_count() const { return times_.size(); }
    const std::vector<double>& times() const { return times_; }
    const std::vector<State>& states() const { return states_; }
    const State& front() const { return states_.front(); }
    const State& back() const { return states_.back(); }

    /// State at time t; exact at nodes, interpolated between them.
    State at(double t) const
    {
        if (!(t >= t_begin() && t <= t_end())) {
            throw DomainError("time " + std::to_string(t) + " outside trajectory span [" +
                              std::to_string(t_begin()) + ", " + std::to_string(t_end()) + "]");
        }
        auto it = std::upper_bound(times_.begin(), times_.end(), t);
        std::size_t k = static_cast<std::size_t>(it - times_.begin()) - 1;
        if (times_[k] == t) return states_[k];
        const auto& c = dense_[k];
        double h = times_[k + 1] - times_[k];
        double theta = (t - times_[k]) / h;
        double theta1 = 1.0 - theta;
        return c[0] + theta * (c[1] + theta1 * (c[2] + theta * (c[3] + theta1 * c[4])));
    }

    void append_step(double t1, const State& x1, const std::array<State, 5>& coeffs)
    {
        times_.push_back(t1);
        states_.push_back(x1);
        dense_.push_back(coeffs);
    }

private:
    std::vector<double> times_;
    std::vector<State> states_;
    std::vector<std::array<State, 5>> dense_;
};

template <int Dim>
struct IntegratorOptions {
    using State = Eigen::Matrix<double, Dim, 1>;
    Tolerance tol;
    double max_step = 0.1;
    double min_step = 1e-14;
    std::size_t max_steps = 50'000'000;
    /// Extra upper bound on the step taken from a given state (0 or negative
    /// results are ignored).
    std::function<double(const State&)> step_cap;
    /// Returns true when the state must be rejected as escaped.
    std::function<bool(const State&)> escaped;
};

struct IntegrationStatus {
    bool escaped = false;
    double last_valid_time = 0.0;
};

/// Fraction of the declared tolerance spent on each step's local error, so
/// that global errors of moderately unstable flows stay near the declared
/// tolerance.
inline constexpr double kLocalErrorFraction = 0.1;

namespace detail {

struct Dopri5Tableau {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                            a75 = -2187.0 / 6784, a76 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double d1 = -12715105075.0 / 11282082432.0,
                            d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0,
                            d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};

} // namespace detail

/// Integrates dx/dt = rhs(t, x) from (t0, x0) to t1 > t0 and appends the
/// steps to a dense trajectory. On escape the trajectory is truncated at the
/// last accepted state and the status reports it.
template <int Dim, typename Rhs>
IntegrationStatus integrate_dopri5(const Rhs& rhs, double t0,
                                   const Eigen::Matrix<double, Dim, 1>& x0, double t1,
                                   const IntegratorOptions<Dim>& opt,
                                   DenseTrajectory<Dim>& out)
{
    using State = Eigen::Matrix<double, Dim, 1>;
    using T = detail::Dopri5Tableau;

    out = DenseTrajectory<Dim>(t0, x0);
    IntegrationStatus status;
    status.last_valid_time = t0;
    if (t1 <= t0) return status;

    auto scale = [&](const State& a, const State& b) {
        State s;
        for (int i = 0; i < a.size(); ++i) {
            s[i] = kLocalErrorFraction *
                   opt.tol.target(std::max(std::abs(a[i]), std::abs(b[i])));
        }
        return s;
    };

    State x = x0;
    double t = t0;
    State k1 = rhs(t, x);

    auto cap_step = [&](double h) {
        h = std::min(h, opt.max_step);
        if (opt.step_cap) {
            double c = opt.step_cap(x);
            if (c > 0.0 && std::isfinite(c)) h = std::min(h, c);
        }
        return std::max(h, opt.min_step);
    };

    // Initial step guess (Hairer & Wanner, II.4).
    double h;
    {
        State sk = scale(x, x);
        double d0 = (x.array() / sk.array()).matrix().norm() / std::sqrt(double(x.size()));
        double d1 = (k1.array() / sk.array()).matrix().norm() / std::sqrt(double(x.size()));
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, t1 - t0);
        State x1 = x + h0 * k1;
        State f1 = rhs(t + h0, x1);
        double d2 = ((f1 - k1).array() / sk.array()).matrix().norm() /
                    std::sqrt(double(x.size())) / h0;
        double h1 = (std::max(d1, d2) <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                 : std::pow(0.01 / std::max(d1, d2), 0.2);
        h = std::min(100 * h0, h1);
    }

    bool last_rejected = false;
    for (std::size_t n = 0; n < opt.max_steps; ++n) {
        h = cap_step(h);
        bool final_step = false;
        if (t + h >= t1 || t + 1.01 * h >= t1) {
            h = t1 - t;
            final_step = true;
        }

        State k2 = rhs(t + T::c2 * h, x + h * (T::a21 * k1));
        State k3 = rhs(t + T::c3 * h, x + h * (T::a31 * k1 + T::a32 * k2));
        State k4 = rhs(t + T::c4 * h, x + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3));
        State k5 = rhs(t + T::c5 * h,
                       x + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4));
        State k6 = rhs(t + h, x + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 +
                                       T::a64 * k4 + T::a65 * k5));
        State xn = x + h * (T::a71 * k1 + T::a73 * k3 + T::a74 * k4 + T::a75 * k5 +
                            T::a76 * k6);
        State k7 = rhs(t + h, xn);

        State err_vec = h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 +
                             T::e6 * k6 + T::e7 * k7);
        State sk = scale(x, xn);
        double err = (err_vec.array() / sk.array()).abs().maxCoeff();
        if (!std::isfinite(err)) err = 1e10;

        if (err <= 1.0) {
            if (opt.escaped && opt.escaped(xn)) {
                status.escaped = true;
                return status;
            }
            std::array<State, 5> c;
            State ydiff = xn - x;
            State bspl = h * k1 - ydiff;
            c[0] = x;
            c[1] = ydiff;
            c[2] = bspl;
            c[3] = ydiff - h * k7 - bspl;
            c[4] = h * (T::d1 * k1 + T::d3 * k3 + T::d4 * k4 + T::d5 * k5 + T::d6 * k6 +
                        T::d7 * k7);
            double tn = final_step ? t1 : t + h;
            out.append_step(tn, xn, c);
            t = tn;
            x = xn;
            k1 = k7;
            status.last_valid_time = t;
            if (final_step) return status;
            double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
            fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
            h *= fac;
            last_rejected = false;
        } else {
            double fac = std::max(0.2, 0.9 * std::pow(err, -0.2));
            h *= fac;
            last_rejected = true;
            if (h < opt.min_step) {
                throw Error("step size underflow at t=" + std::to_string(t));
            }
        }
    }
    throw Error("integrator exceeded step budget at t=" + std::to_string(t));
}

} // namespace shadowlab

#endif
