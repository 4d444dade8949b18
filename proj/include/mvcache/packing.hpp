#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mvcache/content.hpp"
#include "mvcache/scenario.hpp"
#include "mvcache/sir.hpp"
#include "mvcache/stp.hpp"

namespace mvcache {

/// x-axis resolution of the packing box: widths live on a 1e-9 lattice.
inline constexpr std::int64_t kPackOne = 1000000000;

// Disjoint sorted half-open intervals on the x lattice.
class IntervalSet {
public:
    static IntervalSet full(std::int64_t hi) {
        IntervalSet s;
        if (hi > 0) s.iv_.emplace_back(0, hi);
        return s;
    }

    void add(std::int64_t lo, std::int64_t hi) {
        if (lo >= hi) return;
        std::vector<std::pair<std::int64_t, std::int64_t>> out;
        std::size_t i = 0;
        while (i < iv_.size() && iv_[i].second < lo) out.push_back(iv_[i++]);
        while (i < iv_.size() && iv_[i].first <= hi) {
            lo = std::min(lo, iv_[i].first);
            hi = std::max(hi, iv_[i].second);
            ++i;
        }
        out.emplace_back(lo, hi);
        while (i < iv_.size()) out.push_back(iv_[i++]);
        iv_.swap(out);
    }

    void subtract(std::int64_t lo, std::int64_t hi) {
        if (lo >= hi) return;
        std::vector<std::pair<std::int64_t, std::int64_t>> out;
        for (auto [a, b] : iv_) {
            if (b <= lo || a >= hi) {
                out.emplace_back(a, b);
                continue;
            }
            if (a < lo) out.emplace_back(a, lo);
            if (b > hi) out.emplace_back(hi, b);
        }
        iv_.swap(out);
    }

    bool contains(std::int64_t lo, std::int64_t hi) const {
        for (auto [a, b] : iv_)
            if (a <= lo && hi <= b) return true;
        return false;
    }

    bool intersects(std::int64_t lo, std::int64_t hi) const {
        for (auto [a, b] : iv_)
            if (a < hi && lo < b) return true;
        return false;
    }

    std::int64_t measure() const {
        std::int64_t m = 0;
        for (auto [a, b] : iv_) m += b - a;
        return m;
    }

    bool empty() const { return iv_.empty(); }
    const std::vector<std::pair<std::int64_t, std::int64_t>>& intervals() const { return iv_; }

private:
    std::vector<std::pair<std::int64_t, std::int64_t>> iv_;
};

namespace detail {

// Occupied-height profile of the box: piecewise constant over x, exact
// integer heights on the size grid.
class Skyline {
public:
    explicit Skyline(std::int64_t limit) : limit_(limit) { seg_[0] = 0; }

    void raise(std::int64_t lo, std::int64_t hi, std::int64_t dh) {
        split(lo);
        split(hi);
        for (auto it = seg_.lower_bound(lo); it != seg_.end() && it->first < hi; ++it) it->second += dh;
    }

    std::int64_t height_at(std::int64_t x) const { return std::prev(seg_.upper_bound(x))->second; }

    // segments as (start, end, height)
    template <typename Fn>
    void for_each(Fn&& fn) const {
        for (auto it = seg_.begin(); it != seg_.end(); ++it) {
            auto next = std::next(it);
            fn(it->first, next == seg_.end() ? limit_ : next->first, it->second);
        }
    }

private:
    void split(std::int64_t x) {
        if (x <= 0 || x >= limit_) return;
        auto it = seg_.upper_bound(x);
        std::int64_t h = std::prev(it)->second;
        seg_.emplace_hint(it, x, h);
    }

    std::map<std::int64_t, std::int64_t> seg_;
    std::int64_t limit_;
};

struct Run {
    std::int64_t lo = 0, hi = 0, height = 0;
};

// Lowest free level reachable within the eligibility set, and the leftmost
// maximal run of that level inside it.
inline std::optional<Run> lowest_run(const Skyline& sky, const IntervalSet& elig) {
    if (elig.empty()) return std::nullopt;
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    sky.for_each([&](std::int64_t a, std::int64_t b, std::int64_t h) {
        if (h < best && elig.intersects(a, b)) best = h;
    });
    if (best == std::numeric_limits<std::int64_t>::max()) return std::nullopt;
    // leftmost maximal contiguous stretch inside the set at that height
    for (auto [a, b] : elig.intervals()) {
        std::int64_t run_lo = -1, run_hi = -1;
        bool found = false;
        sky.for_each([&](std::int64_t s, std::int64_t e, std::int64_t h) {
            if (found || e <= a || s >= b) return;
            std::int64_t lo = std::max(s, a), hi = std::min(e, b);
            if (h == best) {
                if (run_hi == lo)
                    run_hi = hi;
                else if (run_lo < 0) {
                    run_lo = lo;
                    run_hi = hi;
                }
            } else if (run_lo >= 0) {
                found = true;
            }
        });
        if (run_lo >= 0) return Run{run_lo, run_hi, best};
    }
    return std::nullopt;
}

inline void check_dims_marginals(const Marginals& t, const Scenario& sc) {
    if (t.n_videos != sc.n_videos || t.levels != sc.levels())
        throw std::invalid_argument("marginals dimensions do not match scenario");
}

inline std::vector<std::int64_t> demand_ticks(const Marginals& t, const Scenario& sc, double tol) {
    check_dims_marginals(t, sc);
    const std::size_t l = sc.levels();
    double budget = 0.0;
    for (std::size_t n = 0; n < sc.n_videos; ++n) {
        double row = 0.0;
        for (std::size_t ell = 0; ell < l; ++ell) {
            double v = t.at(n, ell);
            if (v < -tol || v > 1.0 + tol) throw std::invalid_argument("storage probability outside [0,1]");
            row += v;
            budget += sc.profile.version_sizes[ell] * std::clamp(v, 0.0, 1.0);
        }
        if (sc.profile.encoding == Encoding::SVC && row > 1.0 + tol)
            throw std::invalid_argument("video version probabilities sum above 1");
    }
    if (budget > sc.net.cache_size * (1.0 + tol) + tol)
        throw std::invalid_argument("storage probabilities exceed the cache budget");

    std::vector<std::int64_t> r(t.t.size());
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] = std::llround(std::clamp(t.t[i], 0.0, 1.0) * static_cast<double>(kPackOne));
    if (sc.profile.encoding == Encoding::SVC)
        for (std::size_t n = 0; n < sc.n_videos; ++n) {
            std::int64_t row = 0;
            for (std::size_t ell = 0; ell < l; ++ell) row += r[n * l + ell];
            while (row > kPackOne) {  // rounding pushed the row over; trim the largest entry
                std::size_t arg = n * l;
                for (std::size_t ell = 1; ell < l; ++ell)
                    if (r[n * l + ell] > r[arg]) arg = n * l + ell;
                std::int64_t cut = std::min(row - kPackOne, r[arg]);
                r[arg] -= cut;
                row -= cut;
            }
        }
    return r;
}

}  // namespace detail

struct PackedColumn {
    std::int64_t x_lo = 0, x_hi = 0;  // ticks
    CacheContent content;
};

struct PackedResult {
    CachingDistribution distribution;
    Marginals t_dagger;
    double gap_bound = 0.0;  // asymptotic objective at the input minus at T-dagger
    std::vector<PackedColumn> columns;
    double discarded_demand = 0.0;  // demand dropped by the height guard
    std::size_t dominance_violations = 0;
};

namespace detail {

struct PackContext {
    const Scenario& sc;
    Skyline sky{kPackOne};
    std::vector<IntervalSet> placed;  // O_{n,ell}, row-major
    std::set<std::int64_t> breakpoints{0, kPackOne};
    std::int64_t discarded = 0;

    explicit PackContext(const Scenario& s) : sc(s), placed(s.n_videos * s.levels()) {}

    // place as much of `demand` (ticks) of version ell of video n as fits at
    // the lowest eligible level; shrinks `elig` by what is placed
    void place_demand(std::size_t n, std::size_t ell, std::int64_t demand, IntervalSet& elig) {
        const std::int64_t s = sc.size_int[ell];
        while (demand > 0) {
            auto run = lowest_run(sky, elig);
            if (!run || run->height > sc.cache_int - s) {
                discarded += demand;
                return;
            }
            std::int64_t w = std::min(demand, run->hi - run->lo);
            std::int64_t lo = run->lo, hi = run->lo + w;
            sky.raise(lo, hi, s);
            placed[n * sc.levels() + ell].add(lo, hi);
            elig.subtract(lo, hi);
            breakpoints.insert(lo);
            breakpoints.insert(hi);
            demand -= w;
        }
    }
};

PackedResult extract(PackContext& ctx, const Marginals& t_star);

}  // namespace detail

/// Stage II for SVC (box-packing construction): place versions of each
/// video on disjoint x-ranges, fill residual gaps greedily by marginal
/// asymptotic-STP gain, then read one cache content off every column.
inline PackedResult pack_svc(const Marginals& t_star, const Scenario& sc, double tol = 1e-8) {
    if (sc.profile.encoding != Encoding::SVC) throw std::invalid_argument("scenario is not SVC");
    std::vector<std::int64_t> r = detail::demand_ticks(t_star, sc, tol);
    const std::size_t l = sc.levels();

    detail::PackContext ctx(sc);
    std::vector<IntervalSet> elig(sc.n_videos, IntervalSet::full(kPackOne));  // I_n

    std::int64_t total = 0;
    for (auto v : r) total += v;
    if (total > 0) {
        std::vector<std::size_t> order(sc.n_videos);
        for (std::size_t n = 0; n < sc.n_videos; ++n) order[n] = n;
        std::vector<std::int64_t> weight(sc.n_videos, 0);
        for (std::size_t n = 0; n < sc.n_videos; ++n)
            for (std::size_t ell = 0; ell < l; ++ell) weight[n] += sc.size_int[ell] * r[n * l + ell];
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return weight[a] > weight[b]; });
        for (std::size_t n : order)
            for (std::size_t ell = l; ell-- > 0;)
                if (r[n * l + ell] > 0) ctx.place_demand(n, ell, r[n * l + ell], elig[n]);

        // filler pass over columns
        auto [d1, d2] = [&] {
            SirKernel kernel(sc.net.alpha);
            return kernel.d_coefficients(tau_threshold(sc.theta, sc.net.cache_size).tau);
        }();
        Marginals td(sc.n_videos, l);
        for (std::size_t i = 0; i < td.t.size(); ++i) td.t[i] = static_cast<double>(ctx.placed[i].measure()) / kPackOne;
        std::vector<std::int64_t> bps(ctx.breakpoints.begin(), ctx.breakpoints.end());
        for (std::size_t i = 0; i + 1 < bps.size(); ++i) {
            std::int64_t lo = bps[i], hi = bps[i + 1];
            if (hi <= lo) continue;
            std::int64_t y = ctx.sky.height_at(lo);
            std::size_t j = 0;  // largest version index + 1 that still fits
            for (std::size_t ell = 0; ell < l; ++ell)
                if (y + sc.size_int[ell] <= sc.cache_int) j = ell + 1;
            if (j == 0) continue;
            double width = static_cast<double>(hi - lo) / kPackOne;
            double best_gain = -1.0;
            std::size_t best_n = sc.n_videos;
            for (std::size_t n = 0; n < sc.n_videos; ++n) {
                if (!elig[n].contains(lo, hi)) continue;
                double gain = 0.0, tail = 0.0;
                std::vector<double> tails(l);
                for (std::size_t z = l; z-- > 0;) {
                    tail += td.at(n, z);
                    tails[z] = tail;
                }
                for (std::size_t ell = 0; ell < j; ++ell)
                    gain += sc.popularity.mass(n, ell) * (SirKernel::coverage_from_d(d1, d2, tails[ell] + width) -
                                                          SirKernel::coverage_from_d(d1, d2, tails[ell]));
                if (gain > best_gain + 1e-18) {
                    best_gain = gain;
                    best_n = n;
                }
            }
            if (best_n == sc.n_videos) continue;
            ctx.sky.raise(lo, hi, sc.size_int[j - 1]);
            ctx.placed[best_n * l + (j - 1)].add(lo, hi);
            elig[best_n].subtract(lo, hi);
            td.at(best_n, j - 1) += width;
        }
    }
    return detail::extract(ctx, t_star);
}

/// Stage II for DASH: every (video, version) demand packed independently in
/// decreasing order; same filler and extraction as the SVC construction.
inline PackedResult pack_dash(const Marginals& t_star, const Scenario& sc, double tol = 1e-8) {
    if (sc.profile.encoding != Encoding::DASH) throw std::invalid_argument("scenario is not DASH");
    std::vector<std::int64_t> r = detail::demand_ticks(t_star, sc, tol);
    const std::size_t l = sc.levels();

    detail::PackContext ctx(sc);
    std::int64_t total = 0;
    for (auto v : r) total += v;
    if (total > 0) {
        std::vector<std::size_t> order(r.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        // decreasing demand; ties by video then higher version first
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (r[a] != r[b]) return r[a] > r[b];
            if (a / l != b / l) return a / l < b / l;
            return a % l > b % l;
        });
        for (std::size_t k : order) {
            if (r[k] == 0) continue;
            // a version may not be stored twice in one content
            IntervalSet elig = IntervalSet::full(kPackOne);
            ctx.place_demand(k / l, k % l, r[k], elig);
        }

        auto [d1, d2] = [&] {
            SirKernel kernel(sc.net.alpha);
            return kernel.d_coefficients(tau_threshold(sc.theta, sc.net.cache_size).tau);
        }();
        Marginals td(sc.n_videos, l);
        for (std::size_t i = 0; i < td.t.size(); ++i) td.t[i] = static_cast<double>(ctx.placed[i].measure()) / kPackOne;
        std::vector<std::int64_t> bps(ctx.breakpoints.begin(), ctx.breakpoints.end());
        for (std::size_t i = 0; i + 1 < bps.size(); ++i) {
            std::int64_t lo = bps[i], hi = bps[i + 1];
            if (hi <= lo) continue;
            std::int64_t y = ctx.sky.height_at(lo);
            std::size_t j = 0;
            for (std::size_t ell = 0; ell < l; ++ell)
                if (y + sc.size_int[ell] <= sc.cache_int) j = ell + 1;
            if (j == 0) continue;
            double width = static_cast<double>(hi - lo) / kPackOne;
            double best_gain = -1.0;
            std::size_t best_n = sc.n_videos;
            for (std::size_t n = 0; n < sc.n_videos; ++n) {
                if (ctx.placed[n * l + (j - 1)].intersects(lo, hi)) continue;
                double cur = td.at(n, j - 1);
                double gain = sc.popularity.mass(n, j - 1) * (SirKernel::coverage_from_d(d1, d2, cur + width) -
                                                             SirKernel::coverage_from_d(d1, d2, cur));
                if (gain > best_gain + 1e-18) {
                    best_gain = gain;
                    best_n = n;
                }
            }
            if (best_n == sc.n_videos) continue;
            ctx.sky.raise(lo, hi, sc.size_int[j - 1]);
            ctx.placed[best_n * l + (j - 1)].add(lo, hi);
            td.at(best_n, j - 1) += width;
        }
    }
    return detail::extract(ctx, t_star);
}

inline PackedResult pack(const Marginals& t_star, const Scenario& sc, double tol = 1e-8) {
    return sc.profile.encoding == Encoding::SVC ? pack_svc(t_star, sc, tol) : pack_dash(t_star, sc, tol);
}

namespace detail {

inline PackedResult extract(PackContext& ctx, const Marginals& t_star) {
    const Scenario& sc = ctx.sc;
    const std::size_t l = sc.levels();
    PackedResult out;
    out.t_dagger = Marginals(sc.n_videos, l);
    for (std::size_t i = 0; i < ctx.placed.size(); ++i)
        out.t_dagger.t[i] = static_cast<double>(ctx.placed[i].measure()) / kPackOne;

    std::vector<std::int64_t> bps(ctx.breakpoints.begin(), ctx.breakpoints.end());
    std::map<CacheContent, std::int64_t> mass;
    for (std::size_t i = 0; i + 1 < bps.size(); ++i) {
        std::int64_t lo = bps[i], hi = bps[i + 1];
        if (hi <= lo) continue;
        CacheContent c(sc.n_videos, l);
        for (std::size_t k = 0; k < ctx.placed.size(); ++k)
            if (ctx.placed[k].contains(lo, hi)) c.x[k] = 1;
        out.columns.push_back(PackedColumn{lo, hi, c});
        mass[c] += hi - lo;
    }

    ContentBase base;
    base.mode = sc.profile.encoding;
    std::vector<double> p;
    for (auto& [c, w] : mass) {
        if (!is_feasible(c, sc)) throw std::logic_error("packing produced an infeasible content");
        if (!is_dominant(c, sc)) ++out.dominance_violations;
        base.contents.push_back(c);
        p.push_back(static_cast<double>(w) / kPackOne);
    }
    out.distribution = make_distribution(std::move(base), std::move(p));
    out.discarded_demand = static_cast<double>(ctx.discarded) / kPackOne;

    SirKernel kernel(sc.net.alpha);
    auto [d1, d2] = kernel.d_coefficients(tau_threshold(sc.theta, sc.net.cache_size).tau);
    out.gap_bound = stp_asymptotic_value(sc, t_star, d1, d2) - stp_asymptotic_value(sc, out.t_dagger, d1, d2);
    return out;
}

}  // namespace detail

struct GapReport {
    double q_dagger = 0.0;
    double q_ub = 0.0;
    double bound = 0.0;
};

inline GapReport gap_report(const PackedResult& result, double q_ub, const Scenario& sc) {
    SirKernel kernel(sc.net.alpha);
    auto [d1, d2] = kernel.d_coefficients(tau_threshold(sc.theta, sc.net.cache_size).tau);
    GapReport rep;
    rep.q_dagger = stp_asymptotic_value(sc, result.t_dagger, d1, d2);
    rep.q_ub = q_ub;
    rep.bound = q_ub - rep.q_dagger;
    return rep;
}

}  // namespace mvcache
