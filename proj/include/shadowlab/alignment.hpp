// Monotone time alignment between a sampled pseudo-orbit (rows, times tau)
// and a sampled orbit (columns, times s): the minimum over staircase paths of
// the largest matched distance.
//
// Paths start at (0, 0), use the steps (0,1), (1,0) and (1,1), and may end at
// any column of the last row. A row whose successor has the same time (the
// left limit at a chain junction) is "pinned": the path may neither move
// right inside it nor leave it diagonally, so both rows of a junction meet a
// single orbit time.
//
// The weak variant allows every such path. The strong variant additionally
// constrains the entry columns l_a of consecutive rows:
//     (s[l_{a+1}] - s[l_a]) / (tau[a+1] - tau[a])  in  [1 - e, 1 + e]
// and l_{a+1} = l_a when the two rows share a time.
//
// Both DPs take a distance callable d(a, b) and an optional cap: cells with
// distance above the cap are treated as blocked, and if no path survives the
// result is a lower bound (error > cap).

#ifndef SHADOWLAB_ALIGNMENT_HPP
#define SHADOWLAB_ALIGNMENT_HPP

#include "core.hpp"
#include "reparam.hpp"

#include <vector>

namespace shadowlab {

struct AlignmentResult {
    double error = kInf;
    /// False when every path crossed a blocked cell; error then holds the cap
    /// and the true value is larger.
    bool exact = true;
    /// Entry column per row of an optimal path (empty unless requested).
    std::vector<std::size_t> entry;
    std::size_t end_column = 0;
    std::size_t cells_evaluated = 0;
};

namespace detail {

inline bool pinned_row(const std::vector<double>& tau, std::size_t a)
{
    return a + 1 < tau.size() && tau[a + 1] == tau[a];
}

struct BandRow {
    std::size_t lo = 0;
    std::vector<double> val;
    std::vector<std::size_t> pred; // strong DP only

    bool has(std::size_t b) const { return b >= lo && b < lo + val.size(); }
    double at(std::size_t b) const { return has(b) ? val[b - lo] : kInf; }

    /// Drops blocked cells at both ends; returns false if none is left.
    bool trim()
    {
        std::size_t first = 0;
        while (first < val.size() && !std::isfinite(val[first])) ++first;
        if (first == val.size()) {
            val.clear();
            pred.clear();
            return false;
        }
        std::size_t last = val.size();
        while (!std::isfinite(val[last - 1])) --last;
        val = std::vector<double>(val.begin() + first, val.begin() + last);
        if (!pred.empty()) pred = std::vector<std::size_t>(pred.begin() + first, pred.begin() + last);
        lo += first;
        return true;
    }
};

} // namespace detail

/// Weak alignment over `tau.size()` rows and `columns` columns.
template <typename Dist>
AlignmentResult align_weak(const std::vector<double>& tau, std::size_t columns, Dist&& dist,
                           double cap = kInf, bool witness = true)
{
    using detail::BandRow;
    AlignmentResult res;
    const std::size_t rows = tau.size();
    if (rows == 0 || columns == 0) throw DomainError("alignment needs a non-empty grid");

    auto cell = [&](std::size_t a, std::size_t b) {
        ++res.cells_evaluated;
        double d = dist(a, b);
        return d <= cap ? d : kInf;
    };

    std::vector<BandRow> stored;
    BandRow prev;
    for (std::size_t a = 0; a < rows; ++a) {
        const bool pin = detail::pinned_row(tau, a);
        BandRow cur;
        if (a == 0) {
            cur.lo = 0;
            double v = cell(0, 0);
            cur.val.push_back(v);
            for (std::size_t b = 1; !pin && b < columns && std::isfinite(cur.val.back()); ++b) {
                double d = cell(0, b);
                cur.val.push_back(std::isfinite(d) ? std::max(d, cur.val.back()) : kInf);
            }
        } else {
            const bool prev_pin = detail::pinned_row(tau, a - 1);
            const std::size_t phi = prev.lo + prev.val.size(); // one past last
            cur.lo = prev.lo;
            double left = kInf;
            for (std::size_t b = prev.lo; b < columns; ++b) {
                if (b > phi && !std::isfinite(left)) break;
                double best = prev.at(b);
                if (!prev_pin && b > 0) best = std::min(best, prev.at(b - 1));
                if (!pin) best = std::min(best, left);
                double v = kInf;
                if (std::isfinite(best)) {
                    double d = cell(a, b);
                    if (std::isfinite(d)) v = std::max(d, best);
                }
                cur.val.push_back(v);
                left = v;
            }
        }
        if (!cur.trim()) {
            res.error = cap;
            res.exact = false;
            return res;
        }
        if (witness) stored.push_back(cur);
        prev = std::move(cur);
    }

    // Cheapest end cell; ties go to the smallest column.
    std::size_t end = prev.lo;
    for (std::size_t i = 0; i < prev.val.size(); ++i) {
        if (prev.val[i] < prev.at(end)) end = prev.lo + i;
    }
    res.error = prev.at(end);
    res.end_column = end;
    if (!witness) return res;

    res.entry.assign(rows, 0);
    std::size_t a = rows - 1, b = end;
    const double err = res.error;
    while (a > 0 || b > 0) {
        const BandRow& row = stored[a];
        if (a > 0 && b > 0 && !detail::pinned_row(tau, a - 1) && stored[a - 1].at(b - 1) <= err) {
            res.entry[a] = b;
            --a;
            --b;
        } else if (a > 0 && stored[a - 1].at(b) <= err) {
            res.entry[a] = b;
            --a;
        } else if (b > 0 && !detail::pinned_row(tau, a) && row.at(b - 1) <= err) {
            --b;
        } else {
            throw Error("alignment backtrack lost the optimal path");
        }
    }
    res.entry[0] = 0;
    return res;
}

/// Strong alignment with slope band [1 - e, 1 + e] on entry columns.
template <typename Dist>
AlignmentResult align_strong(const std::vector<double>& tau, const std::vector<double>& s,
                             double eps_rep, Dist&& dist, double cap = kInf,
                             bool witness = true)
{
    using detail::BandRow;
    AlignmentResult res;
    const std::size_t rows = tau.size();
    const std::size_t columns = s.size();
    if (rows == 0 || columns == 0) throw DomainError("alignment needs a non-empty grid");
    if (!(eps_rep >= 0.0)) throw DomainError("eps_rep must be non-negative");

    auto cell = [&](std::size_t a, std::size_t b) {
        ++res.cells_evaluated;
        double d = dist(a, b);
        return d <= cap ? d : kInf;
    };

    std::vector<BandRow> stored;
    BandRow prev;
    prev.lo = 0;
    prev.val = {cell(0, 0)};
    prev.pred = {0};
    if (!prev.trim()) {
        res.error = cap;
        res.exact = false;
        return res;
    }
    if (witness) stored.push_back(prev);

    for (std::size_t a = 0; a + 1 < rows; ++a) {
        const double dt = tau[a + 1] - tau[a];
        BandRow next;
        next.lo = prev.lo;
        auto slot = [&](std::size_t b) -> std::size_t {
            if (b >= next.lo + next.val.size()) {
                next.val.resize(b - next.lo + 1, kInf);
                next.pred.resize(b - next.lo + 1, 0);
            }
            return b - next.lo;
        };
        // Distances of row a, each evaluated once.
        std::vector<double> rowd;
        auto row_cell = [&](std::size_t b) {
            std::size_t k = b - prev.lo;
            if (k >= rowd.size()) rowd.resize(k + 1, -1.0);
            if (rowd[k] < 0.0) rowd[k] = cell(a, b);
            return rowd[k];
        };
        for (std::size_t i = 0; i < prev.val.size(); ++i) {
            const double base = prev.val[i];
            if (!std::isfinite(base)) continue;
            const std::size_t l = prev.lo + i;
            if (dt == 0.0) {
                std::size_t k = slot(l);
                if (base < next.val[k]) {
                    next.val[k] = base;
                    next.pred[k] = l;
                }
                continue;
            }
            double run = 0.0; // max of d(a, l .. l'-1)
            for (std::size_t lp = l; lp < columns; ++lp) {
                double slope = (s[lp] - s[l]) / dt;
                if (slope > 1.0 + eps_rep) break;
                if (slope >= 1.0 - eps_rep) {
                    double c = std::max(base, run);
                    std::size_t k = slot(lp);
                    if (c < next.val[k]) {
                        next.val[k] = c;
                        next.pred[k] = l;
                    }
                }
                run = std::max(run, row_cell(lp));
                if (!std::isfinite(run)) break;
            }
        }
        for (std::size_t i = 0; i < next.val.size(); ++i) {
            if (!std::isfinite(next.val[i])) continue;
            double d = cell(a + 1, next.lo + i);
            next.val[i] = std::isfinite(d) ? std::max(d, next.val[i]) : kInf;
        }
        if (!next.trim()) {
            res.error = cap;
            res.exact = false;
            return res;
        }
        if (witness) stored.push_back(next);
        prev = std::move(next);
    }

    std::size_t end = prev.lo;
    for (std::size_t i = 0; i < prev.val.size(); ++i) {
        if (prev.val[i] < prev.at(end)) end = prev.lo + i;
    }
    res.error = prev.at(end);
    res.end_column = end;
    if (!witness) return res;

    res.entry.assign(rows, 0);
    std::size_t b = end;
    for (std::size_t a = rows; a-- > 0;) {
        res.entry[a] = b;
        if (a > 0) b = stored[a].pred[b - stored[a].lo];
    }
    return res;
}

/// Same as above over an explicit distance matrix.
inline AlignmentResult align_weak(const Eigen::MatrixXd& D, const std::vector<double>& tau,
                                  double cap = kInf)
{
    return align_weak(tau, static_cast<std::size_t>(D.cols()),
                      [&D](std::size_t a, std::size_t b) { return D(a, b); }, cap);
}

inline AlignmentResult align_strong(const Eigen::MatrixXd& D, const std::vector<double>& tau,
                                    const std::vector<double>& s, double eps_rep,
                                    double cap = kInf)
{
    return align_strong(tau, s, eps_rep,
                        [&D](std::size_t a, std::size_t b) { return D(a, b); }, cap);
}

/// Piecewise-linear g through (tau_a, s[entry_a]) at distinct times, end
/// slopes 1. Runs of equal values (the path stood still in orbit time) are
/// spread inside the next orbit cell so that g is strictly increasing.
inline Reparametrization witness_reparametrization(const std::vector<double>& tau,
                                                   const std::vector<double>& s,
                                                   const std::vector<std::size_t>& entry)
{
    std::vector<double> u;
    std::vector<std::size_t> col;
    for (std::size_t a = 0; a < tau.size(); ++a) {
        if (!u.empty() && tau[a] == u.back()) {
            col.back() = entry[a];
            continue;
        }
        u.push_back(tau[a]);
        col.push_back(entry[a]);
    }
    std::vector<double> v(u.size());
    std::size_t j = 0;
    while (j < u.size()) {
        std::size_t k = j;
        while (k + 1 < u.size() && col[k + 1] == col[j]) ++k;
        const std::size_t c = col[j];
        double width = c + 1 < s.size() ? s[c + 1] - s[c]
                                        : (s.size() > 1 ? s[c] - s[c - 1] : 1.0);
        // Spread over half the cell; the run length is k - j + 1.
        const double n = static_cast<double>(k - j + 1);
        for (std::size_t m = j; m <= k; ++m) {
            v[m] = s[c] + 0.5 * width * static_cast<double>(m - j) / n;
        }
        j = k + 1;
    }
    return Reparametrization(std::move(u), std::move(v), 1.0, 1.0);
}

} // namespace shadowlab

#endif
