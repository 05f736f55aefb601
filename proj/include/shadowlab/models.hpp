// Model vector fields and the one-dimensional Lorenz-map oracle.

#ifndef SHADOWLAB_MODELS_HPP
#define SHADOWLAB_MODELS_HPP

#include "core.hpp"
#include "flow.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace shadowlab {

/// Classical Lorenz system x' = s(y-x), y' = x(r-z) - y, z' = xy - b z.
inline VectorField lorenz(double sigma = 10.0, double rho = 28.0, double beta = 8.0 / 3.0)
{
    if (!(sigma > 0 && rho > 0 && beta > 0)) {
        throw ConfigError("lorenz parameters must be positive");
    }
    VectorField f;
    f.name = "lorenz";
    f.params = {sigma, rho, beta};
    f.eval = [=](const Vec3& x) {
        return Vec3(sigma * (x[1] - x[0]), x[0] * (rho - x[2]) - x[1], x[0] * x[1] - beta * x[2]);
    };
    f.jacobian = [=](const Vec3& x) {
        Mat3 J;
        J << -sigma, sigma, 0.0, rho - x[2], -1.0, -x[0], x[1], x[0], -beta;
        return J;
    };
    f.singularities.push_back(Vec3::Zero());
    if (rho > 1.0) {
        double c = std::sqrt(beta * (rho - 1.0));
        f.singularities.emplace_back(c, c, rho - 1.0);
        f.singularities.emplace_back(-c, -c, rho - 1.0);
    }
    f.check_box = {Vec3(-30, -30, 0), Vec3(30, 30, 60)};
    return f;
}

/// Linear saddle diag(-s1, -s2, u).
inline VectorField saddle(double s1 = 2.0, double s2 = 3.0, double u = 1.0)
{
    if (!(s1 > 0 && s2 > 0 && u > 0)) throw ConfigError("saddle rates must be positive");
    VectorField f;
    f.name = "saddle";
    f.params = {s1, s2, u};
    Mat3 A = Vec3(-s1, -s2, u).asDiagonal();
    f.eval = [A](const Vec3& x) -> Vec3 { return A * x; };
    f.jacobian = [A](const Vec3&) { return A; };
    f.singularities.push_back(Vec3::Zero());
    f.check_box = {Vec3::Constant(-5), Vec3::Constant(5)};
    return f;
}

/// Diagonal linear field x' = diag(a) x with arbitrary real rates.
inline VectorField linear_diagonal(double a1, double a2, double a3)
{
    VectorField f;
    f.name = "linear";
    f.params = {a1, a2, a3};
    Mat3 A = Vec3(a1, a2, a3).asDiagonal();
    f.eval = [A](const Vec3& x) -> Vec3 { return A * x; };
    f.jacobian = [A](const Vec3&) { return A; };
    f.singularities.push_back(Vec3::Zero());
    f.check_box = {Vec3::Constant(-5), Vec3::Constant(5)};
    return f;
}

/// Planar normal form r' = a r (1 - r^2), theta' = 1, with z' = -z.
inline VectorField limit_cycle(double a = 1.0)
{
    if (!(a > 0)) throw ConfigError("limit_cycle rate must be positive");
    VectorField f;
    f.name = "limit_cycle";
    f.params = {a};
    f.eval = [a](const Vec3& x) {
        double g = a * (1.0 - x[0] * x[0] - x[1] * x[1]);
        return Vec3(g * x[0] - x[1], g * x[1] + x[0], -x[2]);
    };
    f.jacobian = [a](const Vec3& x) {
        double r2 = x[0] * x[0] + x[1] * x[1];
        double g = a * (1.0 - r2);
        Mat3 J;
        J << g - 2 * a * x[0] * x[0], -2 * a * x[0] * x[1] - 1.0, 0.0,
            -2 * a * x[0] * x[1] + 1.0, g - 2 * a * x[1] * x[1], 0.0, 0.0, 0.0, -1.0;
        return J;
    };
    f.singularities.push_back(Vec3::Zero());
    f.check_box = {Vec3::Constant(-2), Vec3::Constant(2)};
    return f;
}

/// Closed-form flow of limit_cycle(a).
inline Vec3 limit_cycle_flow(double a, const Vec3& x, double t)
{
    double r0 = std::hypot(x[0], x[1]);
    double th0 = std::atan2(x[1], x[0]);
    double e = std::exp(2 * a * t);
    double r = r0 == 0.0 ? 0.0 : r0 * std::exp(a * t) / std::sqrt(1.0 + r0 * r0 * (e - 1.0));
    double th = th0 + t;
    return Vec3(r * std::cos(th), r * std::sin(th), x[2] * std::exp(-t));
}

/// Builds a model by name: lorenz(sigma, rho, beta), saddle(s1, s2, u),
/// limit_cycle(a), linear(a1, a2, a3). Empty params select defaults.
inline VectorField make_model(const std::string& name, const std::vector<double>& params = {})
{
    auto need = [&](std::size_t n) {
        if (!params.empty() && params.size() != n) {
            throw ConfigError("model '" + name + "' expects " + std::to_string(n) +
                              " parameters, got " + std::to_string(params.size()));
        }
    };
    if (name == "lorenz") {
        need(3);
        return params.empty() ? lorenz() : lorenz(params[0], params[1], params[2]);
    }
    if (name == "saddle") {
        need(3);
        return params.empty() ? saddle() : saddle(params[0], params[1], params[2]);
    }
    if (name == "limit_cycle") {
        need(1);
        return params.empty() ? limit_cycle() : limit_cycle(params[0]);
    }
    if (name == "linear") {
        if (params.size() != 3) throw ConfigError("model 'linear' expects 3 parameters");
        return linear_diagonal(params[0], params[1], params[2]);
    }
    throw ConfigError("unknown model '" + name + "'");
}

struct JacobianAudit {
    double max_relative_error = 0.0;
    double max_singularity_residual = 0.0;
};

/// Compares the analytic Jacobian to central differences at random points of
/// the check box and evaluates the field at the listed singularities.
template <typename Rng>
JacobianAudit audit_field(const VectorField& f, Rng& rng, int samples = 100)
{
    JacobianAudit a;
    for (int i = 0; i < samples; ++i) {
        Vec3 x;
        for (int d = 0; d < 3; ++d) x[d] = rng.uniform(f.check_box.lo[d], f.check_box.hi[d]);
        Mat3 J = f.jacobian(x);
        Mat3 Jfd = finite_difference_jacobian(f, x);
        double scale = std::max(1.0, J.norm());
        a.max_relative_error = std::max(a.max_relative_error, (J - Jfd).norm() / scale);
    }
    for (const auto& q : f.singularities) {
        a.max_singularity_residual = std::max(a.max_singularity_residual, f.eval(q).norm());
    }
    return a;
}

struct Eigenpair {
    double value;
    Vec3 vector;
};

/// Real eigenpairs of the Jacobian at a singularity, sorted descending.
/// Throws GeometryError if the spectrum is not real.
inline std::vector<Eigenpair> real_spectrum(const VectorField& f, const Vec3& q)
{
    Eigen::EigenSolver<Mat3> es(f.jacobian(q));
    std::vector<Eigenpair> out;
    for (int i = 0; i < 3; ++i) {
        auto lam = es.eigenvalues()[i];
        if (std::abs(lam.imag()) > 1e-12 * std::max(1.0, std::abs(lam.real()))) {
            throw GeometryError("complex eigenvalue at singularity", q);
        }
        Vec3 v = es.eigenvectors().col(i).real().normalized();
        out.push_back({lam.real(), v});
    }
    std::sort(out.begin(), out.end(), [](auto& a, auto& b) { return a.value > b.value; });
    return out;
}

/// Eigen-structure of a Lorenz-like singularity: one unstable direction, a
/// weak stable direction, and a strong stable one whose rate lies outside
/// [weak, -weak].
struct LorenzLikeSaddle {
    Vec3 point;
    double unstable_rate;
    double weak_rate;
    double strong_rate;
    Vec3 unstable;
    Vec3 weak_stable;
    Vec3 strong_stable;
};

inline LorenzLikeSaddle lorenz_like_saddle(const VectorField& f, const Vec3& q)
{
    auto spec = real_spectrum(f, q);
    if (!(spec[0].value > 0 && spec[1].value < 0 && spec[2].value < 0)) {
        throw GeometryError("singularity is not a saddle with one unstable direction", q);
    }
    double weak = spec[1].value;
    // Lorenz-like: the other eigenvalues lie outside [weak, -weak].
    if (!(spec[2].value < weak && spec[0].value > -weak)) {
        throw GeometryError("singularity is not Lorenz-like (eigenvalue ordering)", q);
    }
    return {q, spec[0].value, weak, spec[2].value, spec[0].vector, spec[1].vector, spec[2].vector};
}

/// Expanding Lorenz-like interval map f(x) = -sign(x) (1 - c |x|^alpha) on
/// [-1, 1] with a single discontinuity at 0.
struct LorenzMapOracle {
    double c = 2.0;
    double alpha = 0.8;

    double operator()(double x) const
    {
        double s = x > 0 ? 1.0 : -1.0;
        return -s * (1.0 - c * std::pow(std::abs(x), alpha));
    }
    double derivative(double x) const { return c * alpha * std::pow(std::abs(x), alpha - 1.0); }
    /// One-sided limit at 0 from the given side (+1 or -1).
    double limit_at_zero(int side) const { return side > 0 ? -1.0 : 1.0; }
};

struct Itinerary {
    std::vector<double> values; // x_1 .. x_n
    std::vector<int> symbols;   // sign of x_0 .. x_{n-1}
    bool boundary = false;      // an iterate hit the discontinuity
    int boundary_index = -1;
};

inline Itinerary oracle_iterate(const LorenzMapOracle& f, double x, int n,
                                double boundary_eps = 1e-15)
{
    if (!(x >= -1.0 && x <= 1.0)) throw DomainError("oracle input outside [-1, 1]");
    Itinerary it;
    for (int k = 0; k < n; ++k) {
        if (std::abs(x) <= boundary_eps) {
            it.boundary = true;
            it.boundary_index = k;
            break;
        }
        it.symbols.push_back(x > 0 ? 1 : -1);
        x = f(x);
        it.values.push_back(x);
    }
    return it;
}

} // namespace shadowlab

#endif
