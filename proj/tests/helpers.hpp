#pragma once

// Shared scenario builders and brute-force oracles for the test suite.

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "mvcache/content.hpp"
#include "mvcache/load_pmf.hpp"
#include "mvcache/scenario.hpp"

namespace testutil {

using namespace mvcache;

inline Scenario small_scenario(Encoding enc, std::size_t n, std::size_t l, double cache, double lambda_u = 1e-4,
                               double gamma1 = 1.0, double gamma2 = 0.5) {
    std::vector<double> layer(l, 1.0), rates(l);
    std::vector<double> versions(l);
    for (std::size_t i = 0; i < l; ++i) {
        versions[i] = static_cast<double>(i + 1);
        rates[i] = 1e6 * versions[i];
    }
    auto prof = enc == Encoding::SVC ? EncodingProfile::svc(layer, rates) : EncodingProfile::dash(versions, rates);
    NetworkParams net{3e-6, lambda_u, 1e7, 4.0, cache};
    return make_scenario(n, prof, zipf_popularity(n, l, gamma1, gamma2), net);
}

// Brute-force load p.m.f. at the serving helper: enumerate every demand
// indicator vector over reachable (video, version) pairs instead of using
// the suffix-product / convolution identities.
inline std::map<std::int64_t, double> brute_force_load_pmf(const Scenario& sc, const CachingDistribution& d,
                                                           std::size_t rn, std::size_t rl) {
    const std::size_t l = sc.levels();
    const bool svc = sc.profile.encoding == Encoding::SVC;
    Marginals t = marginals(d);
    DemandProbs w = svc ? demand_probs_svc(sc, t) : demand_probs_dash(sc, t);
    double denom = svc ? t.tail(rn, rl) : t.at(rn, rl);

    std::map<std::int64_t, double> pmf;
    for (std::size_t ci = 0; ci < d.base.contents.size(); ++ci) {
        if (d.p[ci] <= 0.0) continue;
        const CacheContent& x = d.base.contents[ci];
        bool eligible = svc ? x.stored_level(rn) >= rl + 1 : x.at(rn, rl) != 0;
        if (!eligible) continue;

        // candidate demand slots: stored (svc: up to the stored level) pairs
        std::vector<std::pair<std::size_t, std::size_t>> slots;
        for (std::size_t m = 0; m < sc.n_videos; ++m)
            for (std::size_t j = 0; j < l; ++j) {
                bool stored = svc ? x.stored_level(m) >= j + 1 : x.at(m, j) != 0;
                if (stored && !(m == rn && j == rl)) slots.push_back({m, j});
            }
        double weight = d.p[ci] / denom;
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << slots.size()); ++mask) {
            double prob = 1.0;
            std::vector<std::uint8_t> demanded(sc.n_videos * l, 0);
            demanded[rn * l + rl] = 1;  // the tagged request is always present
            for (std::size_t s = 0; s < slots.size(); ++s) {
                auto [m, j] = slots[s];
                bool on = (mask >> s) & 1;
                prob *= on ? 1.0 - w.at(m, j) : w.at(m, j);
                demanded[m * l + j] = on;
            }
            if (prob == 0.0) continue;
            std::int64_t load = 0;
            if (svc) {
                for (std::size_t m = 0; m < sc.n_videos; ++m) {
                    std::size_t v = 0;
                    for (std::size_t j = 0; j < l; ++j)
                        if (demanded[m * l + j]) v = j + 1;
                    if (v > 0) load += sc.size_int[v - 1];
                }
            } else {
                for (std::size_t m = 0; m < sc.n_videos; ++m)
                    for (std::size_t j = 0; j < l; ++j)
                        if (demanded[m * l + j]) load += sc.size_int[j];
            }
            pmf[load] += weight * prob;
        }
    }
    return pmf;
}

}  // namespace testutil
