// Piecewise-linear reparametrizations of time and their classes
// Rep (strictly increasing, g(0) = 0), Rep* (additionally onto R) and
// Rep(eps) (every chord slope within eps of 1).

#ifndef SHADOWLAB_REPARAM_HPP
#define SHADOWLAB_REPARAM_HPP

#include "core.hpp"

#include <vector>

namespace shadowlab {

class Reparametrization {
public:
    Reparametrization() : Reparametrization(identity()) {}

    /// Breakpoints u must be strictly increasing; outside [u_0, u_m] g is
    /// extended linearly with the given end slopes.
    Reparametrization(std::vector<double> u, std::vector<double> v, double left_slope,
                      double right_slope)
        : u_(std::move(u)), v_(std::move(v)), left_(left_slope), right_(right_slope)
    {
        if (u_.empty() || u_.size() != v_.size()) {
            throw DomainError("reparametrization needs matching non-empty breakpoint lists");
        }
        for (std::size_t j = 1; j < u_.size(); ++j) {
            if (!(u_[j] > u_[j - 1])) throw DomainError("breakpoint times must increase");
        }
    }

    static Reparametrization identity() { return Reparametrization({0.0}, {0.0}, 1.0, 1.0); }
    static Reparametrization linear(double slope)
    {
        return Reparametrization({0.0}, {0.0}, slope, slope);
    }

    const std::vector<double>& breakpoints() const { return u_; }
    const std::vector<double>& values() const { return v_; }
    double left_slope() const { return left_; }
    double right_slope() const { return right_; }

    double operator()(double t) const
    {
        if (t <= u_.front()) return v_.front() + left_ * (t - u_.front());
        if (t >= u_.back()) return v_.back() + right_ * (t - u_.back());
        auto it = std::upper_bound(u_.begin(), u_.end(), t);
        std::size_t j = static_cast<std::size_t>(it - u_.begin());
        double w = (t - u_[j - 1]) / (u_[j] - u_[j - 1]);
        if (w == 0.0) return v_[j - 1];
        return v_[j - 1] + w * (v_[j] - v_[j - 1]);
    }

    /// Slope of segment j between breakpoints j and j+1.
    double segment_slope(std::size_t j) const
    {
        return (v_[j + 1] - v_[j]) / (u_[j + 1] - u_[j]);
    }

private:
    std::vector<double> u_;
    std::vector<double> v_;
    double left_ = 1.0;
    double right_ = 1.0;
};

inline double rep_eval(const Reparametrization& g, double t) { return g(t); }

/// Same function with breakpoints removed where the slope does not change
/// (relative tolerance 1e-12). A breakpoint at 0 is always kept.
inline Reparametrization without_collinear_breakpoints(const Reparametrization& g)
{
    const auto& u = g.breakpoints();
    const auto& v = g.values();
    auto same = [](double a, double b) {
        return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
    };
    std::vector<double> nu, nv;
    for (std::size_t j = 0; j < u.size(); ++j) {
        double before = j == 0 ? g.left_slope() : g.segment_slope(j - 1);
        double after = j + 1 == u.size() ? g.right_slope() : g.segment_slope(j);
        if (u[j] == 0.0 || !same(before, after)) {
            nu.push_back(u[j]);
            nv.push_back(v[j]);
        }
    }
    if (nu.empty()) {
        nu.push_back(u.front());
        nv.push_back(v.front());
    }
    return Reparametrization(std::move(nu), std::move(nv), g.left_slope(), g.right_slope());
}

struct RepClass {
    bool in_Rep = false;
    bool in_RepStar = false;
    bool in_RepEps = false;
};

/// Class membership of a piecewise-linear g. Strict increase is checked on
/// breakpoint values, with non-negative end slopes; Rep* needs both end slopes
/// positive; Rep(eps) needs every segment and end slope in [1-eps, 1+eps].
/// For piecewise-linear g the extreme chord slopes are attained on single
/// segments, so checking segments is exact.
inline RepClass classify(const Reparametrization& g_in, double eps)
{
    if (!(eps >= 0.0)) throw DomainError("eps must be non-negative");
    const Reparametrization g = without_collinear_breakpoints(g_in);
    RepClass c;
    const auto& v = g.values();
    bool increasing = true;
    for (std::size_t j = 1; j < v.size(); ++j) increasing = increasing && v[j] > v[j - 1];
    c.in_Rep = increasing && g_in(0.0) == 0.0 && g.left_slope() >= 0.0 && g.right_slope() >= 0.0;
    c.in_RepStar = c.in_Rep && g.left_slope() > 0.0 && g.right_slope() > 0.0;
    auto near_one = [eps](double slope) { return slope >= 1.0 - eps && slope <= 1.0 + eps; };
    bool slopes = near_one(g.left_slope()) && near_one(g.right_slope());
    for (std::size_t j = 0; j + 1 < v.size() && slopes; ++j) slopes = near_one(g.segment_slope(j));
    c.in_RepEps = c.in_RepStar && slopes;
    return c;
}

} // namespace shadowlab

#endif
