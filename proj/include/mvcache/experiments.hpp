#pragma once

#include <functional>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvcache/content.hpp"
#include "mvcache/optimize.hpp"
#include "mvcache/packing.hpp"
#include "mvcache/scenario.hpp"
#include "mvcache/simulator.hpp"
#include "mvcache/stp.hpp"

namespace mvcache {

enum class BaselineFamily { MostPopular, UniformDist };

struct BaselineSpec {
    BaselineFamily family = BaselineFamily::MostPopular;
    bool all_versions = false;  // DASH only: store every version of the chosen videos
    std::size_t version = 0;    // 0-based, ignored when all_versions

    std::string name(Encoding mode) const {
        std::string s = family == BaselineFamily::MostPopular ? "most_popular" : "uniform";
        s += mode == Encoding::SVC ? "_svc" : "_dash";
        if (all_versions)
            s += "_all";
        else
            s += "_v" + std::to_string(version + 1);
        return s;
    }
};

/// The four reference placements compared against in each mode.
inline std::vector<BaselineSpec> standard_baselines(Encoding mode, std::size_t levels) {
    std::size_t top = levels - 1;
    if (mode == Encoding::SVC)
        return {{BaselineFamily::MostPopular, false, 0},
                {BaselineFamily::MostPopular, false, top},
                {BaselineFamily::UniformDist, false, 0},
                {BaselineFamily::UniformDist, false, top}};
    return {{BaselineFamily::MostPopular, false, 0},
            {BaselineFamily::MostPopular, true, 0},
            {BaselineFamily::UniformDist, false, 0},
            {BaselineFamily::UniformDist, true, 0}};
}

/// Concrete caching distribution of a baseline. Most-popular variants are a
/// point mass; uniform variants state marginals and realize them by packing.
inline CachingDistribution baseline_distribution(const BaselineSpec& spec, const Scenario& sc) {
    const std::size_t l = sc.levels();
    if (spec.all_versions && sc.profile.encoding != Encoding::DASH)
        throw std::invalid_argument("all-versions baseline requires DASH");
    if (!spec.all_versions && spec.version >= l) throw std::invalid_argument("baseline version out of range");

    double unit = spec.all_versions
                      ? std::accumulate(sc.profile.version_sizes.begin(), sc.profile.version_sizes.end(), 0.0)
                      : sc.profile.version_sizes[spec.version];

    if (spec.family == BaselineFamily::MostPopular) {
        auto k = static_cast<std::size_t>(sc.net.cache_size / unit);
        if (k == 0) throw std::invalid_argument("cache cannot hold a single choice of this baseline");
        k = std::min(k, sc.n_videos);
        std::vector<std::size_t> order(sc.n_videos);
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return sc.popularity.video[a] > sc.popularity.video[b]; });
        CacheContent c(sc.n_videos, l);
        for (std::size_t i = 0; i < k; ++i) {
            if (spec.all_versions)
                for (std::size_t ell = 0; ell < l; ++ell) c.set(order[i], ell, true);
            else
                c.set(order[i], spec.version, true);
        }
        ContentBase base{sc.profile.encoding, {std::move(c)}};
        return make_distribution(std::move(base), {1.0});
    }

    double t = sc.net.cache_size / (static_cast<double>(sc.n_videos) * unit);
    if (t > 1.0 + 1e-12) throw std::invalid_argument("uniform baseline probability exceeds 1");
    t = std::min(t, 1.0);
    Marginals m(sc.n_videos, l);
    for (std::size_t n = 0; n < sc.n_videos; ++n) {
        if (spec.all_versions)
            for (std::size_t ell = 0; ell < l; ++ell) m.at(n, ell) = t;
        else
            m.at(n, spec.version) = t;
    }
    return pack(m, sc).distribution;
}

/// Two-stage placement: relax, then pack.
inline CachingDistribution proposed_distribution(const Scenario& sc) {
    Marginals t_star = solve_relaxed(sc).t_star;
    return pack(t_star, sc).distribution;
}

/// Multi-rate encoding ladder measured from a reference HD clip, in common
/// use for head-to-head comparisons of the two encodings (sizes in storage
/// units of 100 MBytes, rates in bit/s). Rates are renormalized to an exact
/// common rate-per-size when building scenarios.
inline EncodingProfile reference_profile(Encoding mode) {
    if (mode == Encoding::SVC) return EncodingProfile::svc({1.2, 1.95, 1.95}, {67834.4, 178571.2, 288463.2});
    return EncodingProfile::dash({1.0, 2.53, 4.02}, {56600.0, 143340.0, 227640.0});
}

struct ComparisonParams {
    std::size_t n_videos = 20;
    double cache_size = 12.0;
    double gamma1 = 0.8;
    double gamma2 = 1.4;
    double lambda_b = 3e-6;
    double lambda_u = 1e-4;
    double bandwidth = 20e6;
    double alpha = 4.0;
};

inline Scenario comparison_scenario(Encoding mode, const ComparisonParams& p) {
    NetworkParams net{p.lambda_b, p.lambda_u, p.bandwidth, p.alpha, p.cache_size};
    ScenarioOptions opt;
    opt.renormalize_rates = true;
    return make_scenario(p.n_videos, reference_profile(mode), zipf_popularity(p.n_videos, 3, p.gamma1, p.gamma2), net,
                         opt);
}

enum class StpMethod { Analytic, Asymptotic, Simulate };

inline const char* to_string(StpMethod m) {
    switch (m) {
        case StpMethod::Analytic: return "analytic";
        case StpMethod::Asymptotic: return "asymptotic";
        default: return "simulate";
    }
}

struct SweepRow {
    std::string vary;
    double value = 0.0;
    std::string scheme;
    StpMethod method = StpMethod::Analytic;
    double stp = 0.0;
    double ci_halfwidth = 0.0;
};

struct SchemeSpec {
    std::string name;
    std::function<CachingDistribution(const Scenario&)> build;
};

struct SweepRecipe {
    std::string vary_name;
    std::vector<double> grid;
    std::function<Scenario(double)> scenario_at;
    std::vector<SchemeSpec> schemes;
    std::vector<StpMethod> methods = {StpMethod::Analytic};
    SimConfig sim;
    std::size_t workers = 1;
};

inline std::vector<SweepRow> run_sweep(const SweepRecipe& recipe) {
    if (recipe.grid.empty()) throw std::invalid_argument("sweep grid is empty");
    struct Job {
        std::size_t point, scheme;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < recipe.grid.size(); ++i)
        for (std::size_t s = 0; s < recipe.schemes.size(); ++s) jobs.push_back({i, s});

    std::vector<std::vector<SweepRow>> results(jobs.size());
    auto run_job = [&](std::size_t j) {
        const auto& job = jobs[j];
        double value = recipe.grid[job.point];
        const auto& scheme = recipe.schemes[job.scheme];
        try {
            Scenario sc = recipe.scenario_at(value);
            CachingDistribution d = scheme.build(sc);
            for (StpMethod m : recipe.methods) {
                SweepRow row{recipe.vary_name, value, scheme.name, m, 0.0, 0.0};
                switch (m) {
                    case StpMethod::Analytic: row.stp = stp_exact(sc, d).overall; break;
                    case StpMethod::Asymptotic: row.stp = stp_asymptotic(sc, marginals(d)).overall; break;
                    case StpMethod::Simulate: {
                        SimConfig cfg = recipe.sim;
                        auto est = simulate_stp(sc, d, cfg);
                        row.stp = est.estimate;
                        row.ci_halfwidth = est.half_width;
                        break;
                    }
                }
                results[j].push_back(std::move(row));
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("sweep point " + recipe.vary_name + "=" + std::to_string(value) + " scheme " +
                                     scheme.name + ": " + e.what());
        }
    };
    bool has_sim = false;
    for (StpMethod m : recipe.methods) has_sim = has_sim || m == StpMethod::Simulate;
    if (recipe.workers > 1 && !has_sim) {
        std::exception_ptr err;
        std::mutex err_mu;
        detail::run_parallel(jobs.size(), recipe.workers, [&](std::size_t j, std::size_t) {
            try {
                run_job(j);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
            }
        });
        if (err) std::rethrow_exception(err);
    } else {
        for (std::size_t j = 0; j < jobs.size(); ++j) run_job(j);
    }
    std::vector<SweepRow> out;
    for (auto& rs : results)
        for (auto& r : rs) out.push_back(std::move(r));
    return out;
}

inline std::string to_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << "vary_name,value,scheme,flavor,stp,ci_halfwidth\n";
    os.setf(std::ios::fmtflags(0), std::ios::floatfield);
    os.precision(10);
    for (const auto& r : rows)
        os << r.vary << ',' << r.value << ',' << r.scheme << ',' << to_string(r.method) << ',' << r.stp << ','
           << r.ci_halfwidth << '\n';
    return os.str();
}

}  // namespace mvcache
