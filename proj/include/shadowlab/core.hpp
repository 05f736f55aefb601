// Basic types, error hierarchy and small geometry helpers shared by every
// module of the library.

#ifndef SHADOWLAB_CORE_HPP
#define SHADOWLAB_CORE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace shadowlab {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

inline bool is_finite(const Vec3& v)
{
    return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

/// Unit vector orthogonal to `v` (any choice; deterministic).
inline Vec3 any_orthogonal(const Vec3& v)
{
    Vec3 axis = Vec3::UnitX();
    if (std::abs(v.normalized().dot(axis)) > 0.9) axis = Vec3::UnitY();
    return v.cross(axis).normalized();
}

inline double angle_between_deg(const Vec3& a, const Vec3& b)
{
    double c = a.normalized().dot(b.normalized());
    c = std::clamp(c, -1.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi;
}

/// Angle between two lines through the origin (sign of direction ignored).
inline double line_angle_deg(const Vec3& a, const Vec3& b)
{
    double c = std::abs(a.normalized().dot(b.normalized()));
    return std::acos(std::min(1.0, c)) * 180.0 / std::numbers::pi;
}

// Errors. Every failure a caller may want to react to has its own type; the
// CLI maps them onto exit codes.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Raised when a trajectory leaves the configured escape ball.
class EscapedError : public Error {
public:
    EscapedError(double last_time, const Vec3& last_state)
        : Error("trajectory escaped after t=" + std::to_string(last_time)),
          last_valid_time(last_time), last_valid_state(last_state)
    {
    }
    double last_valid_time;
    Vec3 last_valid_state;
};

class FrameCollapseError : public Error {
public:
    FrameCollapseError(double t, double conditioning)
        : Error("tangent frame collapsed at t=" + std::to_string(t) +
                " (sin angle " + std::to_string(conditioning) + ")"),
          time(t)
    {
    }
    double time;
};

class GeometryError : public Error {
public:
    GeometryError(const std::string& what, const Vec3& where)
        : Error(what), point(where)
    {
    }
    explicit GeometryError(const std::string& what) : Error(what), point(Vec3::Zero()) {}
    Vec3 point;
};

class NotSingularApproachError : public Error {
public:
    using Error::Error;
};

class RefineGridError : public Error {
public:
    RefineGridError(double modulus, double limit)
        : Error("alignment grid too coarse: cell modulus " + std::to_string(modulus) +
                " exceeds " + std::to_string(limit)),
          cell_modulus(modulus)
    {
    }
    double cell_modulus;
};

class InconclusiveError : public Error {
public:
    using Error::Error;
};

} // namespace shadowlab

#endif
