// Long-orbit attractor samples, their binary point-cloud file, and a uniform
// grid index for ball queries.

#ifndef SHADOWLAB_ATTRACTOR_HPP
#define SHADOWLAB_ATTRACTOR_HPP

#include "core.hpp"
#include "flow.hpp"
#include "models.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <type_traits>
#include <vector>

namespace shadowlab {

struct AttractorSampleSpec {
    Vec3 start = Vec3(1, 1, 1);
    double transient = 100.0;
    double duration = 5000.0;
    std::size_t count = 5'000'000;
};

struct PointCloud {
    std::string field_name;
    std::vector<double> field_params;
    std::vector<Vec3> points;
};

/// Samples X_t(start) at `count` equally spaced times in
/// [transient, transient + duration]. The orbit is integrated in chunks so the
/// dense output never holds the whole run.
inline PointCloud sample_attractor(const VectorField& field, const AttractorSampleSpec& spec,
                                   const FlowOptions& flow = {})
{
    if (!(spec.transient >= 0.0 && spec.duration > 0.0 && spec.count >= 2)) {
        throw ConfigError("attractor sample needs transient >= 0, duration > 0, count >= 2");
    }
    PointCloud cloud{field.name, field.params, {}};
    cloud.points.reserve(spec.count);
    Vec3 x = spec.start;
    if (spec.transient > 0.0) x = integrate(field, x, spec.transient, flow).end_state();

    const double dt = spec.duration / static_cast<double>(spec.count - 1);
    const double chunk = 10.0;
    std::size_t next = 0;
    double t0 = 0.0;
    while (next < spec.count) {
        double len = std::min(chunk, spec.duration - t0);
        if (len <= 0.0) len = 0.0;
        auto tr = integrate(field, x, len, flow);
        const bool last = t0 + len >= spec.duration;
        while (next < spec.count) {
            double t = static_cast<double>(next) * dt - t0;
            if (t > len && !last) break;
            cloud.points.push_back(tr.at(std::clamp(t, 0.0, len)));
            ++next;
        }
        x = tr.end_state();
        t0 += len;
        if (len == 0.0) break;
    }
    return cloud;
}

// Binary file: "SLPC", u32 version, u32 name length, name bytes, u32 param
// count, params as f64, u64 point count, then x y z per point as f64. All
// numbers little-endian.

namespace detail {

template <typename T>
void write_le(std::ostream& os, T v)
{
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is)
{
    unsigned char buf[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) {
        throw ConfigError("point cloud file truncated");
    }
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

} // namespace detail

inline constexpr std::uint32_t kPointCloudVersion = 1;

inline void write_point_cloud(std::ostream& os, const PointCloud& cloud)
{
    os.write("SLPC", 4);
    detail::write_le<std::uint32_t>(os, kPointCloudVersion);
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(cloud.field_name.size()));
    os.write(cloud.field_name.data(), static_cast<std::streamsize>(cloud.field_name.size()));
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(cloud.field_params.size()));
    for (double p : cloud.field_params) detail::write_le(os, p);
    detail::write_le<std::uint64_t>(os, cloud.points.size());
    for (const auto& x : cloud.points) {
        for (int d = 0; d < 3; ++d) detail::write_le(os, x[d]);
    }
}

inline PointCloud read_point_cloud(std::istream& is)
{
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "SLPC", 4) != 0) {
        throw ConfigError("not a point cloud file");
    }
    if (detail::read_le<std::uint32_t>(is) != kPointCloudVersion) {
        throw ConfigError("unsupported point cloud version");
    }
    PointCloud c;
    auto n = detail::read_le<std::uint32_t>(is);
    c.field_name.resize(n);
    if (!is.read(c.field_name.data(), n)) throw ConfigError("point cloud file truncated");
    auto np = detail::read_le<std::uint32_t>(is);
    for (std::uint32_t i = 0; i < np; ++i) c.field_params.push_back(detail::read_le<double>(is));
    auto count = detail::read_le<std::uint64_t>(is);
    c.points.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        double x = detail::read_le<double>(is);
        double y = detail::read_le<double>(is);
        double z = detail::read_le<double>(is);
        c.points.emplace_back(x, y, z);
    }
    return c;
}

inline void save_point_cloud(const std::string& path, const PointCloud& cloud)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot write point cloud " + path);
    write_point_cloud(os, cloud);
}

inline PointCloud load_point_cloud(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot read point cloud " + path);
    return read_point_cloud(is);
}

/// Uniform grid over the bounding box of a point set; cells store point
/// indices in CSR form.
class GridIndex {
public:
    GridIndex() = default;
    GridIndex(const std::vector<Vec3>& points, double cell) : points_(&points), cell_(cell)
    {
        if (!(cell > 0.0)) throw DomainError("grid cell size must be positive");
        if (points.empty()) return;
        lo_ = hi_ = points.front();
        for (const auto& p : points) {
            lo_ = lo_.cwiseMin(p);
            hi_ = hi_.cwiseMax(p);
        }
        for (int d = 0; d < 3; ++d) {
            dims_[d] = static_cast<std::int64_t>(std::floor((hi_[d] - lo_[d]) / cell_)) + 1;
        }
        std::size_t ncell = static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]);
        start_.assign(ncell + 1, 0);
        std::vector<std::size_t> key(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            key[i] = flat(coord(points[i]));
            ++start_[key[i] + 1];
        }
        for (std::size_t c = 0; c < ncell; ++c) start_[c + 1] += start_[c];
        items_.resize(points.size());
        std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
        for (std::size_t i = 0; i < points.size(); ++i) items_[fill[key[i]]++] = i;
    }

    /// Calls fn(index) for every point within distance r of x, in increasing
    /// cell order and index order within a cell.
    template <typename Fn>
    void for_each_in_ball(const Vec3& x, double r, Fn&& fn) const
    {
        if (!points_ || points_->empty()) return;
        std::array<std::int64_t, 3> a, b;
        for (int d = 0; d < 3; ++d) {
            a[d] = std::max<std::int64_t>(0, cell_of(x[d] - r, d));
            b[d] = std::min<std::int64_t>(dims_[d] - 1, cell_of(x[d] + r, d));
            if (a[d] > b[d]) return;
        }
        const double r2 = r * r;
        for (std::int64_t i = a[0]; i <= b[0]; ++i)
            for (std::int64_t j = a[1]; j <= b[1]; ++j)
                for (std::int64_t k = a[2]; k <= b[2]; ++k) {
                    std::size_t c = flat({i, j, k});
                    for (std::size_t m = start_[c]; m < start_[c + 1]; ++m) {
                        std::size_t idx = items_[m];
                        if (((*points_)[idx] - x).squaredNorm() <= r2) fn(idx);
                    }
                }
    }

    std::vector<std::size_t> ball(const Vec3& x, double r) const
    {
        std::vector<std::size_t> out;
        for_each_in_ball(x, r, [&](std::size_t i) { out.push_back(i); });
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Distance to the nearest indexed point, searching out to max_radius
    /// (returns kInf if none is that close).
    double nearest_distance(const Vec3& x, double max_radius) const
    {
        double best = kInf;
        for (double r = cell_; ; r *= 2.0) {
            double rr = std::min(r, max_radius);
            for_each_in_ball(x, rr, [&](std::size_t i) {
                best = std::min(best, ((*points_)[i] - x).norm());
            });
            if (best <= rr || rr >= max_radius) break;
        }
        return best <= max_radius ? best : kInf;
    }

    const std::vector<Vec3>& points() const { return *points_; }

private:
    std::int64_t cell_of(double v, int d) const
    {
        return static_cast<std::int64_t>(std::floor((v - lo_[d]) / cell_));
    }
    std::array<std::int64_t, 3> coord(const Vec3& p) const
    {
        std::array<std::int64_t, 3> c;
        for (int d = 0; d < 3; ++d) c[d] = std::clamp<std::int64_t>(cell_of(p[d], d), 0, dims_[d] - 1);
        return c;
    }
    std::size_t flat(const std::array<std::int64_t, 3>& c) const
    {
        return static_cast<std::size_t>((c[0] * dims_[1] + c[1]) * dims_[2] + c[2]);
    }

    const std::vector<Vec3>* points_ = nullptr;
    double cell_ = 1.0;
    Vec3 lo_ = Vec3::Zero(), hi_ = Vec3::Zero();
    std::array<std::int64_t, 3> dims_{1, 1, 1};
    std::vector<std::size_t> start_;
    std::vector<std::size_t> items_;
};

/// Attractor sample with its index; membership is proximity within the
/// resolution floor.
class AttractorSample {
public:
    AttractorSample(PointCloud cloud, double cell = 0.5)
        : cloud_(std::make_shared<PointCloud>(std::move(cloud)))
    {
        index_ = GridIndex(cloud_->points, cell);
    }
    const PointCloud& cloud() const { return *cloud_; }
    const std::vector<Vec3>& points() const { return cloud_->points; }
    const GridIndex& index() const { return index_; }
    bool contains(const Vec3& x, double floor = 1e-3) const
    {
        return std::isfinite(index_.nearest_distance(x, floor));
    }

private:
    std::shared_ptr<PointCloud> cloud_;
    GridIndex index_;
};

} // namespace shadowlab

#endif
