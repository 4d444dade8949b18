#include <catch_amalgamated.hpp>

#include "mvcache/experiments.hpp"

using namespace mvcache;

TEST_CASE("standard baseline roster") {
    auto svc = standard_baselines(Encoding::SVC, 3);
    REQUIRE(svc.size() == 4);
    CHECK(svc[0].name(Encoding::SVC) == "most_popular_svc_v1");
    CHECK(svc[1].name(Encoding::SVC) == "most_popular_svc_v3");
    CHECK(svc[2].name(Encoding::SVC) == "uniform_svc_v1");
    CHECK(svc[3].name(Encoding::SVC) == "uniform_svc_v3");
    auto dash = standard_baselines(Encoding::DASH, 3);
    CHECK(dash[1].name(Encoding::DASH) == "most_popular_dash_all");
    CHECK(dash[3].name(Encoding::DASH) == "uniform_dash_all");
}

TEST_CASE("most-popular baseline is a point mass on the top videos") {
    auto sc = comparison_scenario(Encoding::SVC, {});
    BaselineSpec spec{BaselineFamily::MostPopular, false, 0};  // lowest version
    auto d = baseline_distribution(spec, sc);
    REQUIRE(d.p.size() == 1);
    CHECK(d.p[0] == 1.0);
    const auto& c = d.base.contents[0];
    auto k = static_cast<std::size_t>(sc.net.cache_size / sc.profile.version_sizes[0]);
    std::size_t stored = 0;
    for (std::size_t n = 0; n < sc.n_videos; ++n) stored += c.stored_level(n) > 0;
    CHECK(stored == std::min(k, sc.n_videos));
    // Zipf popularity is decreasing, so the stored set is a prefix
    for (std::size_t n = 0; n < stored; ++n) CHECK(c.stored_level(n) == 1);
    CHECK(c.size_on_grid(sc) <= sc.cache_int);
}

TEST_CASE("uniform baseline realizes equal marginals") {
    auto sc = comparison_scenario(Encoding::DASH, {});
    BaselineSpec spec{BaselineFamily::UniformDist, false, 0};
    auto d = baseline_distribution(spec, sc);
    auto m = marginals(d);
    double t = sc.net.cache_size / (static_cast<double>(sc.n_videos) * sc.profile.version_sizes[0]);
    t = std::min(t, 1.0);
    for (std::size_t n = 0; n < sc.n_videos; ++n) CHECK(m.at(n, 0) >= t - 1e-6);  // filler may add on top
    for (const auto& c : d.base.contents) CHECK(c.size_on_grid(sc) <= sc.cache_int);
}

TEST_CASE("proposed beats its baselines at the reference operating point") {
    for (Encoding enc : {Encoding::SVC, Encoding::DASH}) {
        auto sc = comparison_scenario(enc, {});
        double prop = stp_asymptotic(sc, marginals(proposed_distribution(sc))).overall;
        for (const auto& spec : standard_baselines(enc, sc.levels())) {
            double q = stp_asymptotic(sc, marginals(baseline_distribution(spec, sc))).overall;
            CHECK(prop >= q - 1e-9);
        }
    }
}

TEST_CASE("sweep produces one row per point, scheme and method") {
    SweepRecipe recipe;
    recipe.vary_name = "network.lambda_u";
    recipe.grid = {1e-5, 1e-4, 1e-3, 3e-3, 1e-2};
    recipe.scenario_at = [](double lu) {
        ComparisonParams p;
        p.lambda_u = lu;
        return comparison_scenario(Encoding::SVC, p);
    };
    recipe.schemes.push_back({"proposed", [](const Scenario& sc) { return proposed_distribution(sc); }});
    recipe.schemes.push_back({"uniform_svc_v1", [](const Scenario& sc) {
                                  return baseline_distribution({BaselineFamily::UniformDist, false, 0}, sc);
                              }});
    recipe.methods = {StpMethod::Analytic, StpMethod::Asymptotic};
    recipe.workers = 4;
    auto rows = run_sweep(recipe);
    REQUIRE(rows.size() == 5 * 2 * 2);
    for (const auto& r : rows) {
        CHECK(r.vary == "network.lambda_u");
        CHECK(r.stp >= 0.0);
        CHECK(r.stp <= 1.0);
        CHECK(r.ci_halfwidth == 0.0);
    }
    auto csv = to_csv(rows);
    CHECK(csv.rfind("vary_name,value,scheme,flavor,stp,ci_halfwidth\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 21);

    SweepRecipe empty = recipe;
    empty.grid.clear();
    CHECK_THROWS_AS(run_sweep(empty), std::invalid_argument);
}

TEST_CASE("sweep wraps scheme failures with context") {
    SweepRecipe recipe;
    recipe.vary_name = "network.cache";
    recipe.grid = {12.0};
    recipe.scenario_at = [](double) { return comparison_scenario(Encoding::SVC, {}); };
    recipe.schemes.push_back({"boom", [](const Scenario&) -> CachingDistribution {
                                  throw std::runtime_error("scheme exploded");
                              }});
    CHECK_THROWS_WITH(run_sweep(recipe), Catch::Matchers::ContainsSubstring("boom") &&
                                             Catch::Matchers::ContainsSubstring("scheme exploded"));
}

TEST_CASE("reference profiles have the published shape") {
    auto svc = reference_profile(Encoding::SVC);
    std::vector<double> svc_sizes{1.2, 3.15, 5.1}, dash_sizes{1.0, 2.53, 4.02};
    REQUIRE(svc.version_sizes.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(svc.version_sizes[i] == Catch::Approx(svc_sizes[i]).epsilon(1e-12));
    auto dash = reference_profile(Encoding::DASH);
    REQUIRE(dash.version_sizes.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(dash.version_sizes[i] == Catch::Approx(dash_sizes[i]).epsilon(1e-12));
    // nearly proportional rates; scenarios snap them exactly
    CHECK(svc.rate_proportionality_spread() < 0.01);
    CHECK(dash.rate_proportionality_spread() < 0.01);
}
