#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvcache/content.hpp"
#include "mvcache/load_pmf.hpp"
#include "mvcache/scenario.hpp"
#include "mvcache/sir.hpp"

namespace mvcache {

enum class StpFlavor { Exact, Asymptotic };

struct StpReport {
    double overall = 0.0;
    Marginals per_request;  // q_{n,ell}
    Encoding mode = Encoding::SVC;
    StpFlavor flavor = StpFlavor::Exact;
};

namespace detail {

template <typename PerRequest>
StpReport assemble_report(const Scenario& sc, Encoding mode, StpFlavor flavor, PerRequest&& q) {
    StpReport rep;
    rep.mode = mode;
    rep.flavor = flavor;
    rep.per_request = Marginals(sc.n_videos, sc.levels());
    for (std::size_t n = 0; n < sc.n_videos; ++n)
        for (std::size_t ell = 0; ell < sc.levels(); ++ell) {
            double v = q(n, ell);
            rep.per_request.at(n, ell) = v;
            rep.overall += sc.popularity.mass(n, ell) * v;
        }
    return rep;
}

}  // namespace detail

/// Exact successful transmission probability for SVC: per request,
/// sum_k Pr[K=k] f(tau_k, sum_{j>=ell} T_{n,j}). Unreachable requests
/// contribute zero.
inline StpReport stp_svc(const Scenario& sc, const CachingDistribution& d) {
    SirKernel kernel(sc.net.alpha);
    DCoefficientCache cov(kernel, sc.theta, sc.size_grid);
    Marginals t = marginals(d);
    return detail::assemble_report(sc, Encoding::SVC, StpFlavor::Exact, [&](std::size_t n, std::size_t ell) {
        double tail = t.tail(n, ell);
        if (!(tail > 0.0)) return 0.0;
        LoadPmf pmf = pmf_load_svc(sc, d, n, ell);
        double q = 0.0;
        for (std::size_t i = 0; i < pmf.support.size(); ++i) q += pmf.prob[i] * cov.coverage(pmf.support[i], tail);
        return q;
    });
}

/// Exact successful transmission probability for DASH, with f(tau_k, T_{n,ell}).
inline StpReport stp_dash(const Scenario& sc, const CachingDistribution& d) {
    SirKernel kernel(sc.net.alpha);
    DCoefficientCache cov(kernel, sc.theta, sc.size_grid);
    Marginals t = marginals(d);
    return detail::assemble_report(sc, Encoding::DASH, StpFlavor::Exact, [&](std::size_t n, std::size_t ell) {
        double tn = t.at(n, ell);
        if (!(tn > 0.0)) return 0.0;
        LoadPmf pmf = pmf_load_dash(sc, d, n, ell);
        double q = 0.0;
        for (std::size_t i = 0; i < pmf.support.size(); ++i) q += pmf.prob[i] * cov.coverage(pmf.support[i], tn);
        return q;
    });
}

inline StpReport stp_exact(const Scenario& sc, const CachingDistribution& d) {
    return sc.profile.encoding == Encoding::SVC ? stp_svc(sc, d) : stp_dash(sc, d);
}

/// High user density limit for SVC: every load replaced by the cache size.
inline StpReport stp_svc_asymptotic(const Scenario& sc, const Marginals& t) {
    SirKernel kernel(sc.net.alpha);
    DCoefficientCache cov(kernel, sc.theta, sc.size_grid);
    return detail::assemble_report(sc, Encoding::SVC, StpFlavor::Asymptotic,
                                   [&](std::size_t n, std::size_t ell) { return cov.coverage(sc.cache_int, t.tail(n, ell)); });
}

/// High user density limit for DASH.
inline StpReport stp_dash_asymptotic(const Scenario& sc, const Marginals& t) {
    SirKernel kernel(sc.net.alpha);
    DCoefficientCache cov(kernel, sc.theta, sc.size_grid);
    return detail::assemble_report(sc, Encoding::DASH, StpFlavor::Asymptotic,
                                   [&](std::size_t n, std::size_t ell) { return cov.coverage(sc.cache_int, t.at(n, ell)); });
}

inline StpReport stp_asymptotic(const Scenario& sc, const Marginals& t) {
    return sc.profile.encoding == Encoding::SVC ? stp_svc_asymptotic(sc, t) : stp_dash_asymptotic(sc, t);
}

/// Asymptotic objective value only (no per-request matrix); used in solver
/// inner loops.
inline double stp_asymptotic_value(const Scenario& sc, const Marginals& t, double d1, double d2) {
    double q = 0.0;
    for (std::size_t n = 0; n < sc.n_videos; ++n)
        for (std::size_t ell = 0; ell < sc.levels(); ++ell) {
            double x = sc.profile.encoding == Encoding::SVC ? t.tail(n, ell) : t.at(n, ell);
            if (x > 0.0) q += sc.popularity.mass(n, ell) * SirKernel::coverage_from_d(d1, d2, x);
        }
    return q;
}

}  // namespace mvcache
