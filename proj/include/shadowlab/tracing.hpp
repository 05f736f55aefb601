// Deciding whether a finite chain is eps-traced by a true orbit: both the
// pseudo-orbit and each candidate orbit are sampled so that no curve moves
// more than a chord length inside a cell, and the discretized sup-distance is
// minimized over monotone time alignments.

#ifndef SHADOWLAB_TRACING_HPP
#define SHADOWLAB_TRACING_HPP

#include "alignment.hpp"
#include "attractor.hpp"
#include "chain.hpp"
#include "parallel.hpp"
#include "reparam.hpp"
#include "rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace shadowlab {

enum class TraceClass { weak, normal, strong };

inline std::string to_string(TraceClass c)
{
    switch (c) {
    case TraceClass::weak: return "weak";
    case TraceClass::normal: return "normal";
    case TraceClass::strong: return "strong";
    }
    return "?";
}

inline TraceClass parse_trace_class(const std::string& s)
{
    if (s == "weak") return TraceClass::weak;
    if (s == "normal") return TraceClass::normal;
    if (s == "strong") return TraceClass::strong;
    throw ConfigError("unknown tracing class '" + s + "'");
}

struct GridSpec {
    double chord = 0.0;       // largest |X| dt per cell; 0 means eps / 10
    double extension = 2.0;   // orbit window as a multiple of the chain window
    double max_step = 0.05;
    std::size_t max_nodes = 4'000'000;
    // Strong class: uniform orbit spacing strong_refine * eps_rep * (median
    // chain cell), merged with the chain times.
    double strong_refine = 0.5;
    std::size_t max_strong_columns = 400'000;
};

/// Samples of a curve with per-cell Lipschitz bound.
struct SampledCurve {
    std::vector<double> t;
    std::vector<Vec3> x;
    double modulus = 0.0; // max over cells of dt * max |X| at ends and midpoint
};

namespace detail {

inline double cell_bound(const VectorField& f, const Trajectory& tr, double a, double b)
{
    double m = std::max({f(tr.at(a)).norm(), f(tr.at(0.5 * (a + b))).norm(), f(tr.at(b)).norm()});
    return (b - a) * m;
}

/// Next node after t: largest tried step (halving) whose cell bound is <= chord.
inline double next_node(const VectorField& f, const Trajectory& tr, double t, double end,
                        double chord, double max_step, double& bound)
{
    double speed = f(tr.at(t)).norm();
    double dt = std::min(max_step, speed > 0 ? chord / speed : max_step);
    for (;;) {
        double b = std::min(end, t + dt);
        bound = cell_bound(f, tr, t, b);
        if (bound <= chord || dt < 1e-12) return b;
        dt *= 0.5;
    }
}

} // namespace detail

/// Nodes on [a, b] of a trajectory (times relative to its start) with chord
/// control. Both ends are nodes.
inline SampledCurve sample_by_chord(const VectorField& f, const Trajectory& tr, double a,
                                    double b, double chord, double max_step,
                                    std::size_t max_nodes)
{
    SampledCurve c;
    c.t.push_back(a);
    c.x.push_back(tr.at(a));
    double t = a;
    while (t < b) {
        double bound = 0.0;
        t = detail::next_node(f, tr, t, b, chord, max_step, bound);
        c.modulus = std::max(c.modulus, bound);
        c.t.push_back(t);
        c.x.push_back(tr.at(t));
        if (c.t.size() > max_nodes) throw InconclusiveError("grid node budget exhausted");
    }
    return c;
}

/// Rows of the alignment: chain times tau with every junction S_i present
/// twice, first with the left limit X_{t_{i-1}}(x_{i-1}), then with x_i.
struct ChainGrid {
    std::vector<double> tau;
    std::vector<Vec3> points;
    double modulus = 0.0;
    double chord = 0.0;
    double min_cell = kInf; // smallest positive tau step
    double typical_cell = 0.0; // median positive tau step
    std::vector<double> times; // tau without repeats
};

inline ChainGrid chain_grid(const FiniteChain& chain, double chord, const GridSpec& spec = {})
{
    if (!(chord > 0.0)) throw DomainError("grid chord must be positive");
    ChainGrid g;
    g.chord = chord;
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const double S = chain.clock().S(i);
        auto c = sample_by_chord(chain.field(), chain.segment(i), 0.0, chain.durations()[i], chord,
                                 spec.max_step, spec.max_nodes);
        g.modulus = std::max(g.modulus, c.modulus);
        for (std::size_t j = 0; j < c.t.size(); ++j) {
            // Segment nodes are offsets from S_i; the first is x_i itself.
            g.tau.push_back(j == 0 ? S : S + c.t[j]);
            g.points.push_back(j == 0 ? chain.points()[i] : c.x[j]);
        }
        // Exact junction time for the left-limit row.
        g.tau.back() = chain.clock().S(i + 1);
        if (g.tau.size() > spec.max_nodes) throw InconclusiveError("chain grid node budget exhausted");
    }
    std::vector<double> cells;
    for (std::size_t a = 1; a < g.tau.size(); ++a) {
        double d = g.tau[a] - g.tau[a - 1];
        if (d > 0) cells.push_back(d);
    }
    if (!cells.empty()) {
        g.min_cell = *std::min_element(cells.begin(), cells.end());
        std::nth_element(cells.begin(), cells.begin() + cells.size() / 2, cells.end());
        g.typical_cell = cells[cells.size() / 2];
    }
    for (double t : g.tau)
        if (g.times.empty() || t != g.times.back()) g.times.push_back(t);
    return g;
}

/// Columns sampled on demand along a candidate orbit. Every chain time
/// inside the orbit window is a column, so an identity-like alignment never
/// pays for grid offsets.
class LazyOrbitGrid {
public:
    LazyOrbitGrid(const VectorField& f, const Vec3& z, double horizon, double chord,
                  double max_step, std::size_t max_nodes, const std::vector<double>* stops,
                  const FlowOptions& flow = {})
        : f_(&f), chord_(chord), max_step_(max_step), max_nodes_(max_nodes), stops_(stops)
    {
        auto part = integrate_until_escape(f, z, horizon, flow);
        tr_ = std::move(part.trajectory);
        end_ = tr_.duration();
        t_.push_back(0.0);
        x_.push_back(z);
    }

    /// True if column b exists (sampling up to it).
    bool ensure(std::size_t b)
    {
        while (x_.size() <= b) {
            double t = t_.back();
            if (t >= end_) return false;
            double bound = 0.0;
            double next = kInf;
            if (stops_) {
                // Chain times are taken directly when the cell allows it;
                // extra columns between them cost a staircase detour.
                while (stop_ < stops_->size() && (*stops_)[stop_] <= t) ++stop_;
                if (stop_ < stops_->size() && (*stops_)[stop_] <= end_) {
                    double b = detail::cell_bound(*f_, tr_, t, (*stops_)[stop_]);
                    if (b <= chord_ * (1.0 + 1e-3)) { // chain cells sit at the chord
                        next = (*stops_)[stop_];
                        bound = b;
                    }
                }
            }
            if (next == kInf) {
                next = detail::next_node(*f_, tr_, t, end_, chord_, max_step_, bound);
                if (stops_ && stop_ < stops_->size() && (*stops_)[stop_] < next) {
                    next = (*stops_)[stop_];
                    bound = detail::cell_bound(*f_, tr_, t, next);
                }
            }
            t = next;
            modulus_ = std::max(modulus_, bound);
            t_.push_back(t);
            x_.push_back(tr_.at(t));
            if (t_.size() > max_nodes_) throw InconclusiveError("orbit grid node budget exhausted");
        }
        return true;
    }

    const Vec3& point(std::size_t b) const { return x_[b]; }
    const std::vector<double>& times() const { return t_; }
    double modulus() const { return modulus_; }
    const Trajectory& trajectory() const { return tr_; }

private:
    const VectorField* f_;
    Trajectory tr_;
    double end_ = 0.0;
    double chord_, max_step_;
    std::size_t max_nodes_;
    const std::vector<double>* stops_;
    std::size_t stop_ = 0;
    std::vector<double> t_;
    std::vector<Vec3> x_;
    double modulus_ = 0.0;
};

/// Orbit columns for the strong class: the chain times merged with a uniform
/// grid, so the identity alignment is always available.
inline SampledCurve strong_orbit_grid(const VectorField& f, const Vec3& z, const ChainGrid& cg,
                                      double eps_rep, const GridSpec& spec,
                                      const FlowOptions& flow = {})
{
    const double window = cg.tau.back();
    const double horizon = std::min(spec.extension, 1.0 + eps_rep) * window;
    auto part = integrate_until_escape(f, z, horizon, flow);
    const Trajectory& tr = part.trajectory;
    const double end = tr.duration();
    std::vector<double> t;
    for (double v : cg.tau)
        if (v <= end && (t.empty() || v != t.back())) t.push_back(v);
    if (eps_rep > 0.0 && cg.typical_cell > 0.0) {
        double step = spec.strong_refine * eps_rep * cg.typical_cell;
        step = std::max(step, horizon / static_cast<double>(spec.max_strong_columns));
        for (double v = step; v < end; v += step) t.push_back(v);
        std::sort(t.begin(), t.end());
        t.erase(std::unique(t.begin(), t.end()), t.end());
    }
    SampledCurve c;
    c.t = std::move(t);
    for (double v : c.t) c.x.push_back(tr.at(v));
    for (std::size_t b = 1; b < c.t.size(); ++b) {
        c.modulus = std::max(c.modulus, detail::cell_bound(f, tr, c.t[b - 1], c.t[b]));
    }
    return c;
}

struct CandidateAlignment {
    double error = kInf;
    bool exact = true;   // false: error is a lower bound (cap reached)
    bool inconclusive = false;
    double modulus = 0.0; // chain + orbit cell bounds
    std::size_t cells = 0;
    Reparametrization g;
};

struct TraceOptions {
    GridSpec grid;
    double eps_rep = -1.0; // strong class; negative means eps
    double cap = -1.0;     // cells above the cap are blocked; negative means 4 eps
    unsigned workers = 1;
    FlowOptions flow;
    // Local refinement around the best candidate: each round tries the six
    // axis neighbours and random points at the current radius, moves on
    // improvement and halves the radius otherwise.
    int refine_rounds = 0;
    int refine_samples = 16;
    double refine_radius = -1.0; // negative means eps
    std::uint64_t seed = 0;
};

namespace detail {

/// Runs align(cap) with a working cap doubling from `start` up to `limit`
/// until some path survives.
template <typename Align>
AlignmentResult deepen_cap(double start, double limit, std::size_t& cells, Align&& align)
{
    double cap = std::min(limit, start);
    for (;;) {
        AlignmentResult r = align(cap);
        cells += r.cells_evaluated;
        if (r.exact || cap >= limit) return r;
        cap = std::min(limit, 2.0 * cap);
    }
}

} // namespace detail

inline double effective_cap(const TraceOptions& opt, double eps)
{
    return opt.cap > 0 ? opt.cap : 4.0 * eps;
}

/// Optimal alignment of one candidate. A candidate farther than the cap from
/// x_0 is rejected at the first cell, which every path uses. When the path
/// is kept, the DP runs with a working cap that doubles from
/// max(d(x_0, z), eps/4) until a path survives, so the stored band stays narrow.
inline CandidateAlignment align_candidate(const FiniteChain& chain, const ChainGrid& cg,
                                          const Vec3& z, TraceClass cls, double eps_rep,
                                          double eps, const TraceOptions& opt, bool witness)
{
    CandidateAlignment out;
    const double d0 = distance(chain.points().front(), z);
    const double cap_limit = effective_cap(opt, eps);
    if (d0 > cap_limit) {
        out.error = d0;
        out.exact = false;
        out.modulus = cg.modulus;
        return out;
    }
    try {
        std::optional<SampledCurve> oc;
        std::optional<LazyOrbitGrid> og;
        if (cls == TraceClass::strong) {
            oc = strong_orbit_grid(chain.field(), z, cg, eps_rep, opt.grid, opt.flow);
            out.modulus = cg.modulus + oc->modulus;
            if (out.modulus > eps / 4.0) throw RefineGridError(out.modulus, eps / 4.0);
        } else {
            og.emplace(chain.field(), z, opt.grid.extension * cg.tau.back(), cg.chord,
                       opt.grid.max_step, opt.grid.max_nodes, &cg.times, opt.flow);
        }
        AlignmentResult r = detail::deepen_cap(witness ? std::max(d0, eps / 4.0) : cap_limit, cap_limit, out.cells, [&](double cap) {
            if (oc) {
                auto dist = [&](std::size_t a, std::size_t b) { return distance(cg.points[a], oc->x[b]); };
                return align_strong(cg.tau, oc->t, eps_rep, dist, cap, witness);
            }
            auto dist = [&](std::size_t a, std::size_t b) {
                if (!og->ensure(b)) return kInf;
                return distance(cg.points[a], og->point(b));
            };
            return align_weak(cg.tau, opt.grid.max_nodes, dist, cap, witness);
        });
        if (og) {
            out.modulus = cg.modulus + og->modulus();
            if (out.modulus > eps / 4.0) throw RefineGridError(out.modulus, eps / 4.0);
        }
        out.error = r.error;
        out.exact = r.exact;
        if (witness && r.exact && std::isfinite(r.error)) {
            if (oc) {
                std::vector<double> u, v;
                for (std::size_t a = 0; a < cg.tau.size(); ++a) {
                    if (!u.empty() && cg.tau[a] == u.back()) continue;
                    u.push_back(cg.tau[a]);
                    v.push_back(oc->t[r.entry[a]]);
                }
                out.g = Reparametrization(std::move(u), std::move(v), 1.0, 1.0);
            } else {
                out.g = witness_reparametrization(cg.tau, og->times(), r.entry);
            }
        }
    } catch (const InconclusiveError&) {
        out.inconclusive = true;
        out.exact = false;
        out.error = kInf;
    }
    return out;
}

struct TraceVerdict {
    double eps = 0.0;
    TraceClass cls = TraceClass::weak;
    double eps_rep = 0.0;
    Vec3 best_z = Vec3::Zero();
    Reparametrization best_g;
    double achieved_error = kInf;
    bool exact = false;        // achieved_error is a true minimum over paths
    bool traced = false;
    bool inconclusive = false; // some candidate exhausted the grid budget
    std::size_t candidate_count = 0;
    std::size_t traced_count = 0;
    std::size_t inconclusive_count = 0;
    double min_exact_error = kInf; // smallest error among candidates with a path under the cap
    double chord = 0.0;
    double modulus = 0.0;      // chain + best orbit cell bounds
    double cap = kInf;
    std::size_t cells = 0;
    int refine_rounds = 0;
    double refine_radius = 0.0; // final radius of the local refinement
    std::string candidates;    // how the candidate set was built
};

/// Best candidate over the list plus refinement; ties go to the
/// lexicographically smallest z. traced = true is a certificate (z, g);
/// traced = false only speaks for the candidates tried.
inline TraceVerdict verify_trace(const FiniteChain& chain, double eps, TraceClass cls,
                                 const std::vector<Vec3>& candidates,
                                 const TraceOptions& opt = {})
{
    if (!(eps > 0.0)) throw DomainError("eps must be positive");
    if (candidates.empty()) throw DomainError("no tracing candidates");
    const double chord = opt.grid.chord > 0 ? opt.grid.chord : eps / 10.0;
    const double eps_rep = opt.eps_rep >= 0 ? opt.eps_rep : eps;
    ChainGrid cg = chain_grid(chain, chord, opt.grid);
    if (cg.modulus > eps / 4.0) throw RefineGridError(cg.modulus, eps / 4.0);

    TraceVerdict v;
    v.eps = eps;
    v.cls = cls;
    v.eps_rep = eps_rep;
    v.chord = chord;
    v.cap = effective_cap(opt, eps);

    auto lex_less = [](const Vec3& a, const Vec3& b) {
        return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
    };
    bool have_best = false;
    Vec3 best_z = Vec3::Zero();
    double best_err = kInf;
    // Evaluates a batch and folds it into the running best in index order.
    auto run = [&](const std::vector<Vec3>& zs) {
        std::vector<CandidateAlignment> res(zs.size());
        parallel_for(zs.size(), opt.workers, [&](std::size_t i) {
            res[i] = align_candidate(chain, cg, zs[i], cls, eps_rep, eps, opt, false);
        });
        bool improved = false;
        for (std::size_t i = 0; i < zs.size(); ++i) {
            const auto& r = res[i];
            ++v.candidate_count;
            v.cells += r.cells;
            if (r.inconclusive) {
                ++v.inconclusive_count;
                continue;
            }
            if (r.exact) v.min_exact_error = std::min(v.min_exact_error, r.error);
            if (r.exact && r.error <= eps) ++v.traced_count;
            if (!have_best || r.error < best_err ||
                (r.error == best_err && lex_less(zs[i], best_z))) {
                improved = improved || !have_best || r.error < best_err;
                have_best = true;
                best_err = r.error;
                best_z = zs[i];
            }
        }
        return improved;
    };
    run(candidates);

    if (have_best && opt.refine_rounds > 0) {
        CounterRng rng = CounterRng(opt.seed).split("trace-refine");
        double r = opt.refine_radius > 0 ? opt.refine_radius : eps;
        for (int round = 0; round < opt.refine_rounds; ++round) {
            std::vector<Vec3> zs;
            for (int k = 0; k < 3; ++k) {
                zs.push_back(best_z + r * Vec3::Unit(k));
                zs.push_back(best_z - r * Vec3::Unit(k));
            }
            for (int k = 0; k < opt.refine_samples; ++k) zs.push_back(best_z + rng.in_ball(r));
            if (!run(zs)) r *= 0.5;
            ++v.refine_rounds;
        }
        v.refine_radius = r;
    }

    v.inconclusive = v.inconclusive_count > 0;
    if (!have_best) {
        v.modulus = cg.modulus;
        return v;
    }
    auto w = align_candidate(chain, cg, best_z, cls, eps_rep, eps, opt, true);
    v.best_z = best_z;
    v.best_g = w.g;
    v.achieved_error = w.error;
    v.exact = w.exact;
    v.modulus = w.modulus;
    v.traced = w.exact && w.error <= eps;
    return v;
}

// ---------------------------------------------------------------------------
// Candidates.

struct CandidateSpec {
    std::size_t subsample = 10'000;  // evenly strided from the attractor sample
    std::size_t local = 1'000;       // sample points in B_{local_radius * eps}(x_0)
    double local_radius = 2.0;
    bool include_x0 = true;
    std::vector<Vec3> extra;
};

inline std::vector<Vec3> trace_candidates(const FiniteChain& chain, double eps,
                                          const AttractorSample* sample, const CandidateSpec& spec)
{
    std::vector<Vec3> out = spec.extra;
    const Vec3& x0 = chain.points().front();
    if (spec.include_x0) out.push_back(x0);
    if (sample) {
        const auto& pts = sample->points();
        auto near = sample->index().ball(x0, spec.local_radius * eps);
        std::size_t n = std::min(spec.local, near.size());
        for (std::size_t i = 0; i < n; ++i) out.push_back(pts[near[i * near.size() / n]]);
        std::size_t m = std::min(spec.subsample, pts.size());
        for (std::size_t i = 0; i < m; ++i) out.push_back(pts[i * pts.size() / m]);
    }
    return out;
}

inline std::string describe_candidates(const CandidateSpec& spec, const AttractorSample* sample)
{
    std::string s = std::to_string(spec.extra.size()) + " explicit";
    if (spec.include_x0) s += " + x0";
    if (sample) {
        s += " + up to " + std::to_string(spec.local) + " sample points within " +
             std::to_string(spec.local_radius) + " eps of x0 + " + std::to_string(spec.subsample) +
             " evenly strided sample points (of " + std::to_string(sample->points().size()) + ")";
    }
    return s;
}

// ---------------------------------------------------------------------------
// Certificates.

struct CertificateCheck {
    double max_distance = kInf;
    double bound = 0.0;
    bool pass = false;
};

/// Re-evaluates d(x0*tau_a, X_{g(tau_a)}(z)) at every chain grid row
/// (left limits included) against eps + modulus.
inline CertificateCheck recheck_certificate(const FiniteChain& chain, const TraceVerdict& v,
                                            const GridSpec& spec = {},
                                            const FlowOptions& flow = {})
{
    CertificateCheck c;
    c.bound = v.eps + v.modulus;
    if (!v.traced) return c;
    ChainGrid cg = chain_grid(chain, v.chord, spec);
    double horizon = 0.0;
    for (double t : cg.tau) horizon = std::max(horizon, v.best_g(t));
    auto tr = integrate(chain.field(), v.best_z, horizon, flow);
    c.max_distance = 0.0;
    for (std::size_t a = 0; a < cg.tau.size(); ++a) {
        double s = std::clamp(v.best_g(cg.tau[a]), 0.0, horizon);
        c.max_distance = std::max(c.max_distance, distance(cg.points[a], tr.at(s)));
    }
    c.pass = c.max_distance <= c.bound;
    return c;
}

// ---------------------------------------------------------------------------
// Class monotonicity on a shared grid.

struct AuditRow {
    Vec3 z = Vec3::Zero();
    double weak = kInf, normal = kInf, strong = kInf;
    bool monotone() const { return weak <= normal && normal <= strong; }
};

/// Weak, normal and strong errors of each candidate on the same rows and
/// columns (the strong column grid).
inline std::vector<AuditRow> implication_audit(const FiniteChain& chain, double eps,
                                               const std::vector<Vec3>& candidates,
                                               const TraceOptions& opt = {})
{
    const double chord = opt.grid.chord > 0 ? opt.grid.chord : eps / 10.0;
    const double eps_rep = opt.eps_rep >= 0 ? opt.eps_rep : eps;
    ChainGrid cg = chain_grid(chain, chord, opt.grid);
    std::vector<AuditRow> rows(candidates.size());
    parallel_for(candidates.size(), opt.workers, [&](std::size_t i) {
        auto oc = strong_orbit_grid(chain.field(), candidates[i], cg, eps_rep, opt.grid, opt.flow);
        auto dist = [&](std::size_t a, std::size_t b) { return distance(cg.points[a], oc.x[b]); };
        AuditRow r;
        r.z = candidates[i];
        const double start = std::max(distance(chain.points().front(), r.z), eps / 4.0);
        std::size_t cells = 0;
        auto w = detail::deepen_cap(start, effective_cap(opt, eps), cells, [&](double cap) {
            return align_weak(cg.tau, oc.t.size(), dist, cap, true);
        });
        r.weak = w.error;
        // Normal: weak witnesses are surjective (end slopes 1), so the
        // optimum is the same path set.
        r.normal = w.error;
        if (w.exact && std::isfinite(w.error)) {
            auto g = witness_reparametrization(cg.tau, oc.t, w.entry);
            if (!classify(g, eps_rep).in_RepStar) r.normal = kInf;
        }
        r.strong = detail::deepen_cap(start, effective_cap(opt, eps), cells, [&](double cap) {
            return align_strong(cg.tau, oc.t, eps_rep, dist, cap, false);
        }).error;
        rows[i] = r;
    });
    return rows;
}

// ---------------------------------------------------------------------------
// JSON.

inline nlohmann::json to_json(const Vec3& x) { return nlohmann::json::array({x[0], x[1], x[2]}); }

inline Vec3 vec3_from_json(const nlohmann::json& j)
{
    if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-vector");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

/// Non-finite values are written as strings so the report stays valid JSON.
inline nlohmann::json json_number(double v)
{
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

inline double number_from_json(const nlohmann::json& j)
{
    if (j.is_number()) return j.get<double>();
    std::string s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    return std::numeric_limits<double>::quiet_NaN();
}

inline nlohmann::json to_json(const Reparametrization& g)
{
    return {{"breakpoints", g.breakpoints()},
            {"values", g.values()},
            {"left_slope", g.left_slope()},
            {"right_slope", g.right_slope()}};
}

inline Reparametrization reparametrization_from_json(const nlohmann::json& j)
{
    return Reparametrization(j.at("breakpoints").get<std::vector<double>>(),
                             j.at("values").get<std::vector<double>>(),
                             j.at("left_slope").get<double>(), j.at("right_slope").get<double>());
}

inline nlohmann::json to_json(const TraceVerdict& v)
{
    return {{"eps", v.eps},
            {"class", to_string(v.cls)},
            {"eps_rep", v.eps_rep},
            {"traced", v.traced},
            {"achieved_error", json_number(v.achieved_error)},
            {"exact", v.exact},
            {"inconclusive", v.inconclusive},
            {"best_z", to_json(v.best_z)},
            {"best_g", to_json(v.best_g)},
            {"candidate_count", v.candidate_count},
            {"traced_count", v.traced_count},
            {"inconclusive_count", v.inconclusive_count},
            {"min_exact_error", json_number(v.min_exact_error)},
            {"grid", {{"chord", v.chord}, {"modulus", v.modulus}, {"cap", json_number(v.cap)}}},
            {"cells", v.cells},
            {"refinement", {{"rounds", v.refine_rounds}, {"final_radius", v.refine_radius}}},
            {"candidates", v.candidates}};
}

inline TraceVerdict verdict_from_json(const nlohmann::json& j)
{
    TraceVerdict v;
    v.eps = j.at("eps").get<double>();
    v.cls = parse_trace_class(j.at("class").get<std::string>());
    v.eps_rep = j.at("eps_rep").get<double>();
    v.traced = j.at("traced").get<bool>();
    v.achieved_error = number_from_json(j.at("achieved_error"));
    v.exact = j.at("exact").get<bool>();
    v.inconclusive = j.at("inconclusive").get<bool>();
    v.best_z = vec3_from_json(j.at("best_z"));
    v.best_g = reparametrization_from_json(j.at("best_g"));
    v.candidate_count = j.at("candidate_count").get<std::size_t>();
    v.traced_count = j.at("traced_count").get<std::size_t>();
    v.inconclusive_count = j.at("inconclusive_count").get<std::size_t>();
    v.min_exact_error = number_from_json(j.at("min_exact_error"));
    v.chord = j.at("grid").at("chord").get<double>();
    v.modulus = j.at("grid").at("modulus").get<double>();
    v.cap = number_from_json(j.at("grid").at("cap"));
    v.cells = j.at("cells").get<std::size_t>();
    v.refine_rounds = j.at("refinement").at("rounds").get<int>();
    v.refine_radius = j.at("refinement").at("final_radius").get<double>();
    v.candidates = j.at("candidates").get<std::string>();
    return v;
}

} // namespace shadowlab

#endif
