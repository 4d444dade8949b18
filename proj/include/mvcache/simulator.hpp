#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "mvcache/content.hpp"
#include "mvcache/load_pmf.hpp"
#include "mvcache/scenario.hpp"
#include "mvcache/sir.hpp"

namespace mvcache {

struct SimConfig {
    double window_side = 0.0;  // meters; 0 derives a side with >= 200 expected helpers
    std::size_t trials = 10000;
    std::uint64_t seed = 1;
    enum class Boundary { Torus, Plain } boundary = Boundary::Torus;
    bool fail_without_helper = true;  // no eligible helper: count as failure vs drop the trial
    std::size_t workers = 1;
};

struct SimEstimate {
    double estimate = 0.0;
    double half_width = 0.0;  // 1.96 * binomial std error
    std::size_t trials = 0;
    std::size_t no_helper = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d49bb133111ebULL;
    return x ^ (x >> 31);
}

using Poly = std::vector<std::pair<double, double>>;

// keep the side of the polygon with a*x + b*y <= c
inline void clip_halfplane(Poly& poly, double a, double b, double c) {
    if (poly.empty()) return;
    Poly out;
    out.reserve(poly.size() + 2);
    for (std::size_t i = 0; i < poly.size(); ++i) {
        auto [x1, y1] = poly[i];
        auto [x2, y2] = poly[(i + 1) % poly.size()];
        double d1 = a * x1 + b * y1 - c, d2 = a * x2 + b * y2 - c;
        if (d1 <= 0.0) out.emplace_back(x1, y1);
        if ((d1 < 0.0) != (d2 < 0.0) && d1 != d2) {
            double t = d1 / (d1 - d2);
            out.emplace_back(x1 + t * (x2 - x1), y1 + t * (y2 - y1));
        }
    }
    poly.swap(out);
}

inline double poly_area(const Poly& poly) {
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        auto [x1, y1] = poly[i];
        auto [x2, y2] = poly[(i + 1) % poly.size()];
        a += x1 * y2 - x2 * y1;
    }
    return 0.5 * std::abs(a);
}

struct Network {
    std::vector<double> hx, hy;      // helper positions
    std::vector<std::size_t> content;  // index into the distribution's base
    double side = 0.0;
    SimConfig::Boundary boundary = SimConfig::Boundary::Torus;

    double dist2(double ax, double ay, double bx, double by) const {
        double dx = std::abs(ax - bx), dy = std::abs(ay - by);
        if (boundary == SimConfig::Boundary::Torus) {
            dx = std::min(dx, side - dx);
            dy = std::min(dy, side - dy);
        }
        return dx * dx + dy * dy;
    }

    // Voronoi cell area of helper b among the helpers flagged in `eligible`
    // (b itself must be flagged). Torus: bisectors against the 3x3 periodic
    // images, starting from the period square centered on b.
    double cell_area(std::size_t b, const std::vector<char>& eligible) const {
        Poly poly;
        double bx = hx[b], by = hy[b];
        if (boundary == SimConfig::Boundary::Torus) {
            double h = 0.5 * side;
            poly = {{bx - h, by - h}, {bx + h, by - h}, {bx + h, by + h}, {bx - h, by + h}};
            for (std::size_t i = 0; i < hx.size(); ++i) {
                if (!eligible[i] || i == b) continue;
                for (int ox = -1; ox <= 1; ++ox)
                    for (int oy = -1; oy <= 1; ++oy) {
                        double px = hx[i] + ox * side, py = hy[i] + oy * side;
                        double a1 = 2.0 * (px - bx), a2 = 2.0 * (py - by);
                        clip_halfplane(poly, a1, a2, px * px + py * py - bx * bx - by * by);
                    }
            }
        } else {
            poly = {{0.0, 0.0}, {side, 0.0}, {side, side}, {0.0, side}};
            for (std::size_t i = 0; i < hx.size(); ++i) {
                if (!eligible[i] || i == b) continue;
                double px = hx[i], py = hy[i];
                double a1 = 2.0 * (px - bx), a2 = 2.0 * (py - by);
                clip_halfplane(poly, a1, a2, px * px + py * py - bx * bx - by * by);
            }
        }
        return poly_area(poly);
    }
};

struct TrialResult {
    bool served = false;
    bool success = false;
    std::int64_t load = 0;  // grid steps
};

// One snapshot: sample the helper process and contents, integrate users out
// per demand class through the serving cell area, then test the SIR threshold.
inline TrialResult run_trial(const Scenario& sc, const CachingDistribution& d, const SimConfig& cfg, double side,
                             std::uint64_t trial, const std::pair<std::size_t, std::size_t>* pin = nullptr) {
    std::mt19937_64 rng(splitmix64(cfg.seed ^ (0x51f0e9b1a2c3d4e5ULL + trial)));
    const std::size_t l = sc.levels();

    Network net;
    net.side = side;
    net.boundary = cfg.boundary;
    std::poisson_distribution<int> n_helpers(sc.net.lambda_b * side * side);
    std::uniform_real_distribution<double> pos(0.0, side);
    int hcount = n_helpers(rng);
    net.hx.resize(hcount);
    net.hy.resize(hcount);
    net.content.resize(hcount);
    for (int i = 0; i < hcount; ++i) {
        net.hx[i] = pos(rng);
        net.hy[i] = pos(rng);
    }
    std::discrete_distribution<std::size_t> pick_content(d.p.begin(), d.p.end());
    for (int i = 0; i < hcount; ++i) net.content[i] = pick_content(rng);

    // typical user request
    std::vector<double> mass(sc.n_videos * l);
    for (std::size_t n = 0; n < sc.n_videos; ++n)
        for (std::size_t ell = 0; ell < l; ++ell) mass[n * l + ell] = sc.popularity.mass(n, ell);
    std::discrete_distribution<std::size_t> pick_request(mass.begin(), mass.end());
    std::size_t req = pick_request(rng);
    std::size_t rn = pin ? pin->first : req / l, rl = pin ? pin->second : req % l;

    const bool svc = sc.profile.encoding == Encoding::SVC;
    double ux = 0.5 * side, uy = 0.5 * side;

    auto serves = [&](std::size_t h, std::size_t m, std::size_t j) {
        const CacheContent& c = d.base.contents[net.content[h]];
        return svc ? c.stored_level(m) >= j + 1 : c.at(m, j) != 0;
    };

    // association: nearest helper able to serve the request
    std::size_t best = hcount;
    double best_d2 = 0.0;
    for (int h = 0; h < hcount; ++h) {
        if (!serves(h, rn, rl)) continue;
        double d2 = net.dist2(ux, uy, net.hx[h], net.hy[h]);
        if (best == static_cast<std::size_t>(hcount) || d2 < best_d2) {
            best = h;
            best_d2 = d2;
        }
    }
    TrialResult out;
    if (best == static_cast<std::size_t>(hcount)) return out;
    out.served = true;

    // load at the serving helper: each demand class lands on it iff some
    // user of that class falls in its class-specific association cell
    const CacheContent& bc = d.base.contents[net.content[best]];
    std::vector<char> eligible(hcount);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    auto demanded = [&](std::size_t m, std::size_t j) {
        if (m == rn && j == rl) return true;
        for (int h = 0; h < hcount; ++h) eligible[h] = serves(h, m, j);
        double area = net.cell_area(best, eligible);
        double p_hit = -std::expm1(-sc.net.lambda_u * sc.popularity.mass(m, j) * area);
        return uni(rng) < p_hit;
    };
    std::int64_t load = 0;
    for (std::size_t m = 0; m < sc.n_videos; ++m) {
        if (svc) {
            std::size_t u = bc.stored_level(m);
            std::size_t v = 0;
            for (std::size_t j = u; j-- > 0;)
                if (demanded(m, j)) {
                    v = j + 1;
                    break;
                }
            if (v > 0) load += sc.size_int[v - 1];
        } else {
            for (std::size_t j = 0; j < l; ++j)
                if (bc.at(m, j) && demanded(m, j)) load += sc.size_int[j];
        }
    }
    out.load = load;

    // SIR at the typical user; all helpers transmit
    std::exponential_distribution<double> fading(1.0);
    double signal = 0.0, interference = 0.0;
    for (int h = 0; h < hcount; ++h) {
        double d2 = net.dist2(ux, uy, net.hx[h], net.hy[h]);
        double p = fading(rng) * std::pow(d2, -0.5 * sc.net.alpha);
        if (static_cast<std::size_t>(h) == best)
            signal = p;
        else
            interference += p;
    }
    double tau = tau_threshold(sc.theta, static_cast<double>(load) * sc.size_grid).tau;
    out.success = interference > 0.0 ? signal >= tau * interference : true;
    return out;
}

inline double auto_side(const Scenario& sc, const SimConfig& cfg) {
    if (cfg.window_side > 0.0) return cfg.window_side;
    return std::sqrt(200.0 / sc.net.lambda_b);
}

template <typename PerTrial>
void run_parallel(std::size_t trials, std::size_t workers, PerTrial&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, trials));
    if (workers == 1) {
        for (std::size_t t = 0; t < trials; ++t) fn(t, 0);
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t t = w; t < trials; t += workers) fn(t, w);
        });
    for (auto& th : pool) th.join();
}

}  // namespace detail

/// Monte Carlo estimate of the successful transmission probability.
inline SimEstimate simulate_stp(const Scenario& sc, const CachingDistribution& d, const SimConfig& cfg) {
    if (cfg.trials == 0) throw std::invalid_argument("need at least one trial");
    double side = detail::auto_side(sc, cfg);
    if (sc.net.lambda_b * side * side < 50.0) throw std::invalid_argument("window too small for the helper density");

    std::size_t workers = std::max<std::size_t>(1, cfg.workers);
    std::vector<std::size_t> succ(workers, 0), unserved(workers, 0);
    detail::run_parallel(cfg.trials, workers, [&](std::size_t t, std::size_t w) {
        auto r = detail::run_trial(sc, d, cfg, side, t);
        if (!r.served) ++unserved[w];
        if (r.success) ++succ[w];
    });
    SimEstimate est;
    for (std::size_t w = 0; w < workers; ++w) est.no_helper += unserved[w];
    std::size_t n = cfg.fail_without_helper ? cfg.trials : cfg.trials - est.no_helper;
    std::size_t s = 0;
    for (std::size_t w = 0; w < workers; ++w) s += succ[w];
    est.trials = n;
    if (n > 0) {
        est.estimate = static_cast<double>(s) / static_cast<double>(n);
        est.half_width = 1.96 * std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(n));
    }
    return est;
}

/// Empirical load distribution at the typical user's serving helper, for a
/// pinned request (n, ell); unserved trials are dropped.
inline LoadPmf simulate_load_pmf(const Scenario& sc, const CachingDistribution& d, std::size_t n, std::size_t ell,
                                 const SimConfig& cfg) {
    if (cfg.trials == 0) throw std::invalid_argument("need at least one trial");
    double side = detail::auto_side(sc, cfg);

    const std::pair<std::size_t, std::size_t> pin{n, ell};
    std::size_t workers = std::max<std::size_t>(1, cfg.workers);
    std::vector<std::map<std::int64_t, std::size_t>> counts(workers);
    std::vector<std::size_t> served(workers, 0);
    detail::run_parallel(cfg.trials, workers, [&](std::size_t t, std::size_t w) {
        auto r = detail::run_trial(sc, d, cfg, side, t, &pin);
        if (!r.served) return;
        ++served[w];
        ++counts[w][r.load];
    });
    std::map<std::int64_t, double> merged;
    std::size_t total = 0;
    for (std::size_t w = 0; w < workers; ++w) total += served[w];
    for (std::size_t w = 0; w < workers; ++w)
        for (auto [k, c] : counts[w]) merged[k] += static_cast<double>(c) / static_cast<double>(total);
    LoadPmf pmf;
    for (auto [k, p] : merged) {
        pmf.support.push_back(k);
        pmf.prob.push_back(p);
    }
    return pmf;
}

}  // namespace mvcache
