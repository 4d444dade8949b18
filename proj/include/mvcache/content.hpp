#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvcache/scenario.hpp"

namespace mvcache {

/// Raised when an enumeration or solver guard trips; callers should fall
/// back to the two-stage relax-then-pack path.
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One helper's cache: a binary N x L selection of versions.
struct CacheContent {
    std::size_t n_videos = 0;
    std::size_t levels = 0;
    std::vector<std::uint8_t> x;  // row-major, x[n*L + ell]

    CacheContent() = default;
    CacheContent(std::size_t n, std::size_t l) : n_videos(n), levels(l), x(n * l, 0) {}

    std::uint8_t at(std::size_t n, std::size_t ell) const { return x[n * levels + ell]; }
    void set(std::size_t n, std::size_t ell, bool v) { x[n * levels + ell] = v ? 1 : 0; }

    /// Highest stored version level of video n (1-based), 0 if none. Only
    /// meaningful under the SVC one-version-per-video constraint.
    std::size_t stored_level(std::size_t n) const {
        for (std::size_t ell = levels; ell-- > 0;)
            if (at(n, ell)) return ell + 1;
        return 0;
    }

    std::int64_t size_on_grid(const Scenario& sc) const {
        std::int64_t total = 0;
        for (std::size_t n = 0; n < n_videos; ++n)
            for (std::size_t ell = 0; ell < levels; ++ell)
                if (at(n, ell)) total += sc.size_int[ell];
        return total;
    }

    std::string to_string() const {
        std::string s;
        s.reserve(x.size());
        for (auto v : x) s.push_back(v ? '1' : '0');
        return s;
    }

    static CacheContent from_string(const std::string& s, std::size_t n, std::size_t l) {
        if (s.size() != n * l) throw std::invalid_argument("content string has wrong length");
        CacheContent c(n, l);
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] != '0' && s[i] != '1') throw std::invalid_argument("content string must be 0/1");
            c.x[i] = s[i] == '1';
        }
        return c;
    }

    friend bool operator==(const CacheContent& a, const CacheContent& b) { return a.x == b.x; }
    friend bool operator<(const CacheContent& a, const CacheContent& b) { return a.x < b.x; }
};

inline void check_dims(const CacheContent& c, const Scenario& sc) {
    if (c.n_videos != sc.n_videos || c.levels != sc.levels())
        throw std::invalid_argument("content dimensions do not match scenario");
}

/// Mode-specific feasibility: capacity, and for SVC at most one version per video.
inline bool is_feasible(const CacheContent& c, const Scenario& sc) {
    check_dims(c, sc);
    if (sc.profile.encoding == Encoding::SVC) {
        for (std::size_t n = 0; n < c.n_videos; ++n) {
            int stored = 0;
            for (std::size_t ell = 0; ell < c.levels; ++ell) stored += c.at(n, ell);
            if (stored > 1) return false;
        }
    }
    return c.size_on_grid(sc) <= sc.cache_int;
}

// Storage dominance via local upgrades: SVC - no single video can be raised
// one version level (or given version 1 if unserved) within budget; DASH -
// no absent version can be added within budget. Single-step witnesses
// suffice since sizes are increasing; the test suite cross-checks against
// the full quantifier by brute force on small instances.
inline bool is_dominant(const CacheContent& c, const Scenario& sc) {
    if (!is_feasible(c, sc)) throw std::invalid_argument("is_dominant requires a feasible content");
    std::int64_t slack = sc.cache_int - c.size_on_grid(sc);
    if (sc.profile.encoding == Encoding::SVC) {
        for (std::size_t n = 0; n < c.n_videos; ++n) {
            std::size_t u = c.stored_level(n);
            if (u == c.levels) continue;
            std::int64_t cost = sc.size_int[u] - (u > 0 ? sc.size_int[u - 1] : 0);
            if (cost <= slack) return false;
        }
    } else {
        for (std::size_t n = 0; n < c.n_videos; ++n)
            for (std::size_t ell = 0; ell < c.levels; ++ell)
                if (!c.at(n, ell) && sc.size_int[ell] <= slack) return false;
    }
    return true;
}

struct ContentBase {
    Encoding mode = Encoding::SVC;
    std::vector<CacheContent> contents;
};

/// All feasible, dominant contents in lexicographic order. Exponential in
/// N*L; guarded by `limit`.
inline ContentBase enumerate_base(const Scenario& sc, std::size_t limit = 18) {
    const std::size_t n = sc.n_videos, l = sc.levels();
    if (n * l > limit)
        throw CapacityError("content base enumeration guard exceeded (N*L = " + std::to_string(n * l) +
                            "); use the two-stage relax-then-pack path instead");
    ContentBase base;
    base.mode = sc.profile.encoding;
    if (sc.profile.encoding == Encoding::SVC) {
        // one choice in {0..L} per video
        std::vector<std::size_t> u(n, 0);
        bool done = false;
        while (!done) {
            CacheContent c(n, l);
            for (std::size_t i = 0; i < n; ++i)
                if (u[i] > 0) c.set(i, u[i] - 1, true);
            if (is_feasible(c, sc) && is_dominant(c, sc)) base.contents.push_back(std::move(c));
            std::size_t i = 0;
            for (; i < n; ++i) {
                if (u[i] < l) {
                    ++u[i];
                    break;
                }
                u[i] = 0;
            }
            done = (i == n);
        }
    } else {
        const std::size_t bits = n * l;
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << bits); ++mask) {
            CacheContent c(n, l);
            for (std::size_t i = 0; i < bits; ++i) c.x[i] = (mask >> i) & 1;
            if (is_feasible(c, sc) && is_dominant(c, sc)) base.contents.push_back(std::move(c));
        }
    }
    std::sort(base.contents.begin(), base.contents.end());
    return base;
}

struct CachingDistribution {
    ContentBase base;
    std::vector<double> p;
};

inline CachingDistribution make_distribution(ContentBase base, std::vector<double> p, double tol = 1e-9) {
    if (base.contents.size() != p.size()) throw std::invalid_argument("distribution length mismatch");
    double sum = 0.0;
    for (double v : p) {
        if (v < -tol) throw std::invalid_argument("distribution entries must be nonnegative");
        sum += v;
    }
    if (std::abs(sum - 1.0) > tol) throw std::invalid_argument("distribution must sum to 1");
    return CachingDistribution{std::move(base), std::move(p)};
}

// Per-(video, version) storage probabilities T induced by p.
struct Marginals {
    std::size_t n_videos = 0;
    std::size_t levels = 0;
    std::vector<double> t;  // row-major

    Marginals() = default;
    Marginals(std::size_t n, std::size_t l) : n_videos(n), levels(l), t(n * l, 0.0) {}

    double at(std::size_t n, std::size_t ell) const { return t[n * levels + ell]; }
    double& at(std::size_t n, std::size_t ell) { return t[n * levels + ell]; }

    /// Probability some version >= ell (1-based level index ell+1..L joined
    /// as tail from 0-based ell) is stored.
    double tail(std::size_t n, std::size_t ell) const {
        double s = 0.0;
        for (std::size_t j = ell; j < levels; ++j) s += at(n, j);
        return s;
    }
};

inline Marginals marginals(const CachingDistribution& d) {
    Marginals m;
    if (d.base.contents.empty()) return m;
    m = Marginals(d.base.contents.front().n_videos, d.base.contents.front().levels);
    for (std::size_t i = 0; i < d.p.size(); ++i) {
        const auto& c = d.base.contents[i];
        for (std::size_t k = 0; k < c.x.size(); ++k)
            if (c.x[k]) m.t[k] += d.p[i];
    }
    return m;
}

}  // namespace mvcache
