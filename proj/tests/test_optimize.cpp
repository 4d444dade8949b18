#include <catch_amalgamated.hpp>
#include <random>

#include "helpers.hpp"
#include "mvcache/optimize.hpp"

using namespace mvcache;
using testutil::small_scenario;

namespace {

Scenario random_dash(std::mt19937_64& rng, std::size_t max_videos) {
    std::uniform_real_distribution<double> uni(0.05, 1.0);
    std::size_t n = 2 + rng() % (max_videos - 1);
    std::vector<double> a(n);
    double sa = 0.0;
    for (auto& v : a) sa += (v = uni(rng));
    for (auto& v : a) v /= sa;
    std::vector<std::vector<double>> b(n, std::vector<double>(3));
    for (auto& row : b) {
        double s = 0.0;
        for (auto& v : row) s += (v = uni(rng));
        for (auto& v : row) v /= s;
    }
    double cache = 1.0 + uni(rng) * (static_cast<double>(n) * 6.0 - 2.0);
    cache = std::round(cache * 100.0) / 100.0;
    return make_scenario(n, EncodingProfile::dash({1.0, 2.0, 3.0}, {1e6, 2e6, 3e6}), make_popularity(a, b),
                         NetworkParams{3e-6, 1e-4, 1e7, 4.0, cache});
}

}  // namespace

TEST_CASE("feasible set projection is idempotent and respects the budget") {
    for (Encoding enc : {Encoding::SVC, Encoding::DASH}) {
        auto sc = small_scenario(enc, 3, 2, 4.0);
        RelaxedFeasibleSet feas(sc);
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> uni(-0.5, 1.8);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> x(6);
            for (auto& v : x) v = uni(rng);
            feas.project(x);
            CHECK(feas.budget_slack(x) >= -1e-9);
            for (std::size_t n = 0; n < 3; ++n) {
                double row = 0.0;
                for (std::size_t ell = 0; ell < 2; ++ell) {
                    CHECK(x[n * 2 + ell] >= 0.0);
                    CHECK(x[n * 2 + ell] <= 1.0 + 1e-12);
                    row += x[n * 2 + ell];
                }
                if (enc == Encoding::SVC) CHECK(row <= 1.0 + 1e-9);
            }
            auto y = x;
            feas.project(y);
            for (std::size_t i = 0; i < 6; ++i) CHECK(y[i] == Catch::Approx(x[i]).margin(1e-9));
        }
    }
}

TEST_CASE("dash water-filling meets the budget and the gradient cross-check") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 25; ++trial) {
        auto sc = random_dash(rng, 8);
        auto wf = solve_relaxed_dash(sc);
        CHECK(std::abs(std::min(wf.budget_slack, 0.0)) <= 1e-8 * sc.net.cache_size);
        CHECK(wf.kkt_residual <= 1e-6);
        // independent first-order solve must land on the same optimum
        auto pg = solve_relaxed_gradient(sc);
        CHECK(wf.objective == Catch::Approx(pg.objective).margin(1e-6));
    }
}

TEST_CASE("dash optimum orders by size-normalized popularity") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        auto sc = random_dash(rng, 30);
        auto wf = solve_relaxed_dash(sc);
        auto rep = check_optimality_properties(wf.t_star, sc);
        CHECK(rep.dash_ordering <= 1e-6);
    }
}

TEST_CASE("svc relaxed solver converges with closed-form structure") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> uni(0.05, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        std::size_t n = 2 + rng() % 6;
        std::vector<double> a(n);
        double sa = 0.0;
        for (auto& v : a) sa += (v = uni(rng));
        for (auto& v : a) v /= sa;
        std::vector<std::vector<double>> b(n, std::vector<double>(3));
        for (auto& row : b) {
            double s = 0.0;
            for (auto& v : row) s += (v = uni(rng));
            for (auto& v : row) v /= s;
        }
        double cache = 1.0 + std::round(uni(rng) * (static_cast<double>(n) * 3.0 - 2.0) * 100.0) / 100.0;
        auto sc = make_scenario(n, EncodingProfile::svc({1.0, 1.0, 1.0}, {1e6, 2e6, 3e6}), make_popularity(a, b),
                                NetworkParams{3e-6, 1e-4, 1e7, 4.0, cache});
        auto sol = solve_relaxed_svc(sc);
        CHECK(sol.converged);
        CHECK(sol.kkt_residual <= 1e-6);
        CHECK(sol.budget_slack >= -1e-8 * sc.net.cache_size);
        auto rep = check_optimality_properties(sol.t_star, sc);
        CHECK(rep.zero_when_dominated <= 1e-6);
        CHECK(rep.monotone_under_sqrt_gap <= 1e-6);
        CHECK(rep.tail_ordering <= 1e-6);
    }
}

TEST_CASE("relaxed optimum matches dense grid search on tiny instances") {
    for (Encoding enc : {Encoding::SVC, Encoding::DASH}) {
        auto sc = small_scenario(enc, 2, 2, 2.0);
        auto [d1, d2] = asymptotic_d(sc);
        auto sol = solve_relaxed(sc);

        double best = 0.0;
        const double step = 0.02;
        Marginals t(2, 2);
        for (double t00 = 0.0; t00 <= 1.0 + 1e-9; t00 += step)
            for (double t01 = 0.0; t01 <= 1.0 + 1e-9; t01 += step)
                for (double t10 = 0.0; t10 <= 1.0 + 1e-9; t10 += step)
                    for (double t11 = 0.0; t11 <= 1.0 + 1e-9; t11 += step) {
                        if (enc == Encoding::SVC && (t00 + t01 > 1.0 + 1e-9 || t10 + t11 > 1.0 + 1e-9)) continue;
                        double used = sc.profile.version_sizes[0] * (t00 + t10) +
                                      sc.profile.version_sizes[1] * (t01 + t11);
                        if (used > sc.net.cache_size + 1e-9) continue;
                        t.t = {t00, t01, t10, t11};
                        best = std::max(best, stp_asymptotic_value(sc, t, d1, d2));
                    }
        CHECK(sol.objective >= best - 1e-7);
        CHECK(sol.objective <= best + 1e-3);
    }
}

TEST_CASE("exact solver is sandwiched by the relaxation") {
    for (Encoding enc : {Encoding::SVC, Encoding::DASH}) {
        auto sc = small_scenario(enc, 3, 2, 4.0);
        auto base = enumerate_base(sc);
        auto ex = solve_exact(sc, base);
        auto rel = solve_relaxed(sc);
        CHECK(ex.converged);
        CHECK(ex.objective <= rel.objective + 1e-8);
        double sum = 0.0;
        for (double p : ex.distribution.p) {
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK(sum == Catch::Approx(1.0).epsilon(1e-9));
    }
    auto sc = small_scenario(Encoding::DASH, 3, 2, 4.0);
    CHECK_THROWS_AS(solve_exact(sc, enumerate_base(sc), 2), CapacityError);
}
