#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mvcache/content.hpp"
#include "mvcache/scenario.hpp"

namespace mvcache {

// Discrete load distribution on the exact size grid.
struct LoadPmf {
    std::vector<std::int64_t> support;  // grid steps, sorted
    std::vector<double> prob;

    double total() const {
        double s = 0.0;
        for (double p : prob) s += p;
        return s;
    }

    double mean_load(double grid) const {
        double m = 0.0;
        for (std::size_t i = 0; i < support.size(); ++i) m += static_cast<double>(support[i]) * grid * prob[i];
        return m;
    }
};

inline LoadPmf dense_to_pmf(const std::vector<double>& dense, double drop_below = 0.0) {
    LoadPmf out;
    for (std::size_t k = 0; k < dense.size(); ++k)
        if (dense[k] > drop_below) {
            out.support.push_back(static_cast<std::int64_t>(k));
            out.prob.push_back(dense[k]);
        }
    return out;
}

// No-demand probabilities per (video, version): the chance that a serving
// helper's cell sees no request for that layer/description. Entries whose
// storage denominator is zero are unreachable and marked absent.
struct DemandProbs {
    std::size_t n_videos = 0;
    std::size_t levels = 0;
    std::vector<double> w;          // row-major; NaN marks unreachable
    bool reachable(std::size_t n, std::size_t ell) const { return !std::isnan(w[n * levels + ell]); }
    double at(std::size_t n, std::size_t ell) const { return w[n * levels + ell]; }
};

namespace detail {
inline double voronoi_no_demand(double popularity_mass, double lambda_u, double storage_prob, double lambda_b) {
    // mean cell load ratio per the size-biased Voronoi cell area law
    double ratio = popularity_mass * lambda_u / (3.5 * storage_prob * lambda_b);
    return std::pow(1.0 + ratio, -4.5);
}
}  // namespace detail

/// w_{n,ell} for SVC: denominator is the tail storage probability sum_{j>=ell} T_{n,j}.
inline DemandProbs demand_probs_svc(const Scenario& sc, const Marginals& t) {
    DemandProbs d{sc.n_videos, sc.levels(), std::vector<double>(sc.n_videos * sc.levels(), 0.0)};
    for (std::size_t n = 0; n < sc.n_videos; ++n)
        for (std::size_t ell = 0; ell < sc.levels(); ++ell) {
            double tail = t.tail(n, ell);
            d.w[n * d.levels + ell] =
                tail > 0.0 ? detail::voronoi_no_demand(sc.popularity.mass(n, ell), sc.net.lambda_u, tail, sc.net.lambda_b)
                           : std::nan("");
        }
    return d;
}

/// w~_{n,ell} for DASH: denominator is T_{n,ell} itself.
inline DemandProbs demand_probs_dash(const Scenario& sc, const Marginals& t) {
    DemandProbs d{sc.n_videos, sc.levels(), std::vector<double>(sc.n_videos * sc.levels(), 0.0)};
    for (std::size_t n = 0; n < sc.n_videos; ++n)
        for (std::size_t ell = 0; ell < sc.levels(); ++ell) {
            double tn = t.at(n, ell);
            d.w[n * d.levels + ell] =
                tn > 0.0 ? detail::voronoi_no_demand(sc.popularity.mass(n, ell), sc.net.lambda_u, tn, sc.net.lambda_b)
                         : std::nan("");
        }
    return d;
}

// Distribution of the transmitted version v_m in {0..u_m} of one video at
// the serving helper, under SVC multicast. `requested` carries (n, ell)
// when m is the requested video; transmission then conditions on v_m >= ell.
struct VersionDist {
    std::vector<double> prob;  // index = version level, 0-based over 0..u_m
};

inline VersionDist per_video_version_dist(std::size_t stored_level, const DemandProbs& w, std::size_t video,
                                          std::optional<std::size_t> requested_level_1b) {
    VersionDist out;
    out.prob.assign(stored_level + 1, 0.0);
    if (stored_level == 0) {
        if (requested_level_1b) throw std::invalid_argument("requested video has nothing stored");
        out.prob[0] = 1.0;
        return out;
    }
    auto wv = [&](std::size_t level_1b) { return w.at(video, level_1b - 1); };
    if (!requested_level_1b) {
        // Pr[v=i] = (1 - w_i) * prod_{z=i+1..u} w_z ; Pr[v=0] = prod all w
        double suffix = 1.0;
        for (std::size_t i = stored_level; i >= 1; --i) {
            out.prob[i] = (1.0 - wv(i)) * suffix;
            suffix *= wv(i);
        }
        out.prob[0] = suffix;
    } else {
        std::size_t ell = *requested_level_1b;
        if (ell == 0 || ell > stored_level) throw std::invalid_argument("requested version not stored");
        double suffix = 1.0;
        for (std::size_t i = stored_level; i > ell; --i) {
            out.prob[i] = (1.0 - wv(i)) * suffix;
            suffix *= wv(i);
        }
        out.prob[ell] = suffix;  // all higher layers undemanded
    }
    return out;
}

namespace detail {

// convolve dense load vector (grid-indexed) with a sparse per-item
// distribution of (size step, probability) outcomes
inline void convolve_in_place(std::vector<double>& dense, const std::vector<std::pair<std::int64_t, double>>& item) {
    std::vector<double> next(dense.size(), 0.0);
    for (std::size_t k = 0; k < dense.size(); ++k) {
        double pk = dense[k];
        if (pk == 0.0) continue;
        for (auto [step, q] : item) {
            std::size_t idx = k + static_cast<std::size_t>(step);
            if (idx < next.size()) next[idx] += pk * q;
        }
    }
    dense.swap(next);
}

}  // namespace detail

/// Exact load p.m.f. at the serving helper for an SVC request (n, ell),
/// 0-based indices; built by per-video convolution over each eligible content.
inline LoadPmf pmf_load_svc(const Scenario& sc, const CachingDistribution& d, std::size_t n, std::size_t ell) {
    Marginals t = marginals(d);
    double tail = t.tail(n, ell);
    if (!(tail > 0.0)) throw std::domain_error("request is unreachable: no content stores version >= ell");
    DemandProbs w = demand_probs_svc(sc, t);

    std::vector<double> acc(static_cast<std::size_t>(sc.cache_int) + 1, 0.0);
    for (std::size_t ci = 0; ci < d.base.contents.size(); ++ci) {
        if (d.p[ci] <= 0.0) continue;
        const CacheContent& x = d.base.contents[ci];
        std::size_t un = x.stored_level(n);
        if (un < ell + 1) continue;
        std::vector<double> dense(acc.size(), 0.0);
        dense[0] = 1.0;
        for (std::size_t m = 0; m < sc.n_videos; ++m) {
            std::size_t um = x.stored_level(m);
            if (um == 0) continue;
            VersionDist vd = per_video_version_dist(um, w, m, m == n ? std::optional<std::size_t>(ell + 1) : std::nullopt);
            std::vector<std::pair<std::int64_t, double>> item;
            for (std::size_t v = 0; v < vd.prob.size(); ++v)
                if (vd.prob[v] > 0.0) item.emplace_back(v == 0 ? 0 : sc.size_int[v - 1], vd.prob[v]);
            detail::convolve_in_place(dense, item);
        }
        double weight = d.p[ci] / tail;
        for (std::size_t k = 0; k < dense.size(); ++k) acc[k] += weight * dense[k];
    }
    return dense_to_pmf(acc);
}

/// Exact load p.m.f. for a DASH request (n, ell): every stored description
/// transmits independently unless undemanded; the requested one always does.
inline LoadPmf pmf_load_dash(const Scenario& sc, const CachingDistribution& d, std::size_t n, std::size_t ell) {
    Marginals t = marginals(d);
    double tn = t.at(n, ell);
    if (!(tn > 0.0)) throw std::domain_error("request is unreachable: no content stores this version");
    DemandProbs w = demand_probs_dash(sc, t);

    std::vector<double> acc(static_cast<std::size_t>(sc.cache_int) + 1, 0.0);
    for (std::size_t ci = 0; ci < d.base.contents.size(); ++ci) {
        if (d.p[ci] <= 0.0) continue;
        const CacheContent& x = d.base.contents[ci];
        if (!x.at(n, ell)) continue;
        std::vector<double> dense(acc.size(), 0.0);
        dense[static_cast<std::size_t>(sc.size_int[ell])] = 1.0;  // requested description always transmits
        for (std::size_t m = 0; m < sc.n_videos; ++m)
            for (std::size_t j = 0; j < sc.levels(); ++j) {
                if (!x.at(m, j) || (m == n && j == ell)) continue;
                double wj = w.at(m, j);
                detail::convolve_in_place(dense, {{0, wj}, {sc.size_int[j], 1.0 - wj}});
            }
        double weight = d.p[ci] / tn;
        for (std::size_t k = 0; k < dense.size(); ++k) acc[k] += weight * dense[k];
    }
    return dense_to_pmf(acc);
}

inline LoadPmf pmf_load(const Scenario& sc, const CachingDistribution& d, std::size_t n, std::size_t ell) {
    return sc.profile.encoding == Encoding::SVC ? pmf_load_svc(sc, d, n, ell) : pmf_load_dash(sc, d, n, ell);
}

}  // namespace mvcache
