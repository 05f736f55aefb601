// Finite (delta, T)-chains: construction, evaluation of the concatenated
// pseudo-orbit x0*t, junction validation and the flat record file format.

#ifndef SHADOWLAB_CHAIN_HPP
#define SHADOWLAB_CHAIN_HPP

#include "core.hpp"
#include "flow.hpp"
#include "models.hpp"
#include "rng.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace shadowlab {

/// Partial sums S_0 = 0, S_{i+1} = S_i + t_i; S_{k+1} is the total duration.
class ChainClock {
public:
    ChainClock() = default;
    explicit ChainClock(const std::vector<double>& durations)
    {
        sums_.reserve(durations.size() + 1);
        sums_.push_back(0.0);
        for (double t : durations) sums_.push_back(sums_.back() + t);
    }
    double S(std::size_t i) const { return sums_.at(i); }
    double total() const { return sums_.back(); }
    const std::vector<double>& sums() const { return sums_; }
    std::size_t segment_count() const { return sums_.size() - 1; }

    /// Index i with S_i <= t < S_{i+1}; the closed right end maps to the last
    /// segment.
    std::size_t segment_of(double t) const
    {
        if (!(t >= 0.0 && t <= total())) {
            throw DomainError("chain time " + std::to_string(t) + " outside [0, " +
                              std::to_string(total()) + "]");
        }
        auto it = std::upper_bound(sums_.begin(), sums_.end(), t);
        std::size_t i = static_cast<std::size_t>(it - sums_.begin()) - 1;
        return std::min(i, segment_count() - 1);
    }

private:
    std::vector<double> sums_;
};

struct ChainMetadata {
    std::uint64_t seed = 0;
    std::string origin = "manual";
};

/// {x_i; t_i}_0^k together with delta, T and the field it lives in. The
/// segment trajectories X_{[0,t_i]}(x_i) are integrated once at construction.
class FiniteChain {
public:
    FiniteChain(VectorField field, std::vector<Vec3> points, std::vector<double> durations,
                double delta, double T, FlowOptions flow = {}, ChainMetadata meta = {})
        : field_(std::make_shared<VectorField>(std::move(field))),
          points_(std::move(points)), durations_(std::move(durations)), delta_(delta), T_(T),
          flow_(flow), meta_(std::move(meta))
    {
        if (points_.empty() || points_.size() != durations_.size()) {
            throw DomainError("chain needs one duration per point and at least one point");
        }
        for (double t : durations_) {
            if (!(t >= T_)) {
                throw DomainError("chain duration " + std::to_string(t) + " is below T=" +
                                  std::to_string(T_));
            }
        }
        if (!(delta_ >= 0.0)) throw DomainError("chain delta must be non-negative");
        clock_ = ChainClock(durations_);
        segments_.reserve(points_.size());
        for (std::size_t i = 0; i < points_.size(); ++i) {
            segments_.push_back(integrate(*field_, points_[i], durations_[i], flow_));
        }
    }

    const VectorField& field() const { return *field_; }
    const std::vector<Vec3>& points() const { return points_; }
    const std::vector<double>& durations() const { return durations_; }
    double delta() const { return delta_; }
    double T() const { return T_; }
    const FlowOptions& flow_options() const { return flow_; }
    const ChainMetadata& metadata() const { return meta_; }
    const ChainClock& clock() const { return clock_; }
    const Trajectory& segment(std::size_t i) const { return segments_.at(i); }
    std::size_t size() const { return points_.size(); }
    double total_duration() const { return clock_.total(); }

    /// x0*t = X_{t - S_i}(x_i) for S_i <= t < S_{i+1}; at t = S_{k+1} the
    /// value X_{t_k}(x_k).
    Vec3 eval(double t) const
    {
        std::size_t i = clock_.segment_of(t);
        return segments_[i].at(std::min(t - clock_.S(i), durations_[i]));
    }

    /// Left limit of x0*t at junction S_i (i >= 1): X_{t_{i-1}}(x_{i-1}).
    Vec3 left_limit(std::size_t i) const { return segments_.at(i - 1).end_state(); }

private:
    std::shared_ptr<const VectorField> field_;
    std::vector<Vec3> points_;
    std::vector<double> durations_;
    double delta_;
    double T_;
    FlowOptions flow_;
    ChainMetadata meta_;
    ChainClock clock_;
    std::vector<Trajectory> segments_;
};

inline Vec3 chain_eval(const FiniteChain& chain, double t) { return chain.eval(t); }

struct ChainValidation {
    std::vector<double> defects; // d(X_{t_i}(x_i), x_{i+1}), i = 0..k-1
    double margin = 0.0;
    std::vector<std::size_t> failing;
    bool durations_ok = true;
    bool pass() const { return failing.empty() && durations_ok; }
};

/// Per-junction defects; a junction passes iff its defect is at most
/// delta + margin, where the margin covers integration error.
inline ChainValidation validate_chain(const FiniteChain& chain)
{
    ChainValidation v;
    double scale = 0.0;
    for (std::size_t i = 0; i < chain.size(); ++i) {
        scale = std::max(scale, chain.segment(i).end_state().norm());
    }
    v.margin = 10.0 * chain.flow_options().tol.target(scale);
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
        double d = distance(chain.segment(i).end_state(), chain.points()[i + 1]);
        v.defects.push_back(d);
        if (!(d <= chain.delta() + v.margin)) v.failing.push_back(i);
    }
    for (double t : chain.durations()) v.durations_ok = v.durations_ok && t >= chain.T();
    return v;
}

/// Pseudo-orbit with x_{i+1} = X_{t_i}(x_i) + uniform ball perturbation of
/// radius `noise`; the resulting chain carries delta = 2 * noise.
inline FiniteChain build_perturbed_chain(const VectorField& field, const Vec3& x0,
                                         const std::vector<double>& durations, double noise,
                                         std::uint64_t seed, const FlowOptions& flow = {})
{
    if (durations.empty()) throw DomainError("perturbed chain needs at least one segment");
    if (!(noise >= 0.0)) throw DomainError("noise must be non-negative");
    CounterRng rng = CounterRng(seed).split("perturbed-chain");
    std::vector<Vec3> points{x0};
    for (std::size_t i = 0; i + 1 < durations.size(); ++i) {
        Vec3 end = integrate(field, points.back(), durations[i], flow).end_state();
        Vec3 kick = rng.in_ball(1.0) * noise;
        points.push_back(end + kick);
    }
    double T = *std::min_element(durations.begin(), durations.end());
    return FiniteChain(field, std::move(points), durations, 2.0 * noise, T, flow,
                       {seed, "perturbed"});
}

// Flat record file. Header lines are "key value..."; the body has one segment
// per line "x y z t". Doubles are written in shortest round-trip form so the
// file reproduces the chain bit for bit.

namespace io {

inline std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s)
{
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ConfigError("cannot parse number '" + s + "'");
    }
    return v;
}

} // namespace io

inline void write_chain(std::ostream& os, const FiniteChain& chain)
{
    using io::format_double;
    os << "# shadowlab chain v1\n";
    os << "field " << chain.field().name << "\n";
    os << "params";
    for (double p : chain.field().params) os << ' ' << format_double(p);
    os << "\n";
    os << "delta " << format_double(chain.delta()) << "\n";
    os << "T " << format_double(chain.T()) << "\n";
    os << "seed " << chain.metadata().seed << "\n";
    os << "origin " << chain.metadata().origin << "\n";
    os << "tol " << format_double(chain.flow_options().tol.abs) << ' '
       << format_double(chain.flow_options().tol.rel) << "\n";
    os << "segments " << chain.size() << "\n";
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const Vec3& x = chain.points()[i];
        os << format_double(x[0]) << ' ' << format_double(x[1]) << ' ' << format_double(x[2])
           << ' ' << format_double(chain.durations()[i]) << "\n";
    }
}

inline FiniteChain read_chain(std::istream& is, FlowOptions flow = {})
{
    std::string line, name;
    std::vector<double> params;
    double delta = 0.0, T = 0.0;
    ChainMetadata meta;
    std::size_t count = 0;
    bool have_count = false;
    auto fail = [](const std::string& why) -> void { throw ConfigError("chain file: " + why); };

    while (!have_count && std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        std::string tok;
        if (key == "field") {
            ls >> name;
        } else if (key == "params") {
            while (ls >> tok) params.push_back(io::parse_double(tok));
        } else if (key == "delta") {
            ls >> tok;
            delta = io::parse_double(tok);
        } else if (key == "T") {
            ls >> tok;
            T = io::parse_double(tok);
        } else if (key == "seed") {
            ls >> meta.seed;
        } else if (key == "origin") {
            ls >> meta.origin;
        } else if (key == "tol") {
            std::string a, r;
            ls >> a >> r;
            flow.tol = {io::parse_double(a), io::parse_double(r)};
        } else if (key == "segments") {
            ls >> count;
            have_count = true;
        } else {
            fail("unknown header key '" + key + "'");
        }
    }
    if (!have_count) fail("missing 'segments' line");
    std::vector<Vec3> points;
    std::vector<double> durations;
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(is, line)) fail("truncated body");
        std::istringstream ls(line);
        std::string a, b, c, d;
        if (!(ls >> a >> b >> c >> d)) fail("malformed segment line '" + line + "'");
        points.emplace_back(io::parse_double(a), io::parse_double(b), io::parse_double(c));
        durations.push_back(io::parse_double(d));
    }
    return FiniteChain(make_model(name, params), std::move(points), std::move(durations), delta,
                       T, flow, meta);
}

inline void save_chain(const std::string& path, const FiniteChain& chain)
{
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write chain file " + path);
    write_chain(os, chain);
}

inline FiniteChain load_chain(const std::string& path, FlowOptions flow = {})
{
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read chain file " + path);
    return read_chain(is, flow);
}

} // namespace shadowlab

#endif
