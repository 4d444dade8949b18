#include <catch_amalgamated.hpp>

#include "mvcache/scenario.hpp"

using namespace mvcache;

TEST_CASE("zipf law normalizes and ranks") {
    auto p = zipf(4, 1.0);
    double sum = 0.0;
    for (double v : p) sum += v;
    CHECK(sum == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(p[0] > p[1]);
    CHECK(p[2] > p[3]);
    CHECK(p[0] / p[1] == Catch::Approx(2.0));

    auto flat = zipf(5, 0.0);
    for (double v : flat) CHECK(v == Catch::Approx(0.2));
    CHECK_THROWS_AS(zipf(0, 1.0), std::invalid_argument);
}

TEST_CASE("svc profile prefix-sums layer sizes") {
    auto p = EncodingProfile::svc({1.0, 2.0, 0.5}, {1e6, 3e6, 3.5e6});
    REQUIRE(p.levels == 3);
    CHECK(p.version_sizes == std::vector<double>{1.0, 3.0, 3.5});
    CHECK(p.rate_proportionality_spread() == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("profile validation rejects bad shapes") {
    CHECK_THROWS_AS(EncodingProfile::svc({1.0, -1.0}, {1e6, 2e6}), std::invalid_argument);
    CHECK_THROWS_AS(EncodingProfile::dash({2.0, 1.0}, {1e6, 2e6}), std::invalid_argument);
    CHECK_THROWS_AS(EncodingProfile::dash({1.0, 2.0}, {1e6}), std::invalid_argument);
    CHECK_THROWS_AS(EncodingProfile::dash({1.0, 2.0}, {1e6, -2e6}), std::invalid_argument);
}

TEST_CASE("theta requires rate proportionality") {
    auto good = EncodingProfile::dash({1.0, 2.0}, {1e6, 2e6});
    CHECK(theta(good, 1e7) == Catch::Approx(0.1));
    auto bad = EncodingProfile::dash({1.0, 2.0}, {1e6, 2.5e6});
    CHECK_THROWS_AS(theta(bad, 1e7), std::invalid_argument);
    CHECK_THROWS_AS(theta(good, 0.0), std::invalid_argument);
}

TEST_CASE("scenario renormalizes rates when asked") {
    auto prof = EncodingProfile::dash({1.0, 2.53, 4.02}, {56600.0, 143340.0, 227640.0});
    NetworkParams net{3e-6, 1e-4, 20e6, 4.0, 12.0};
    auto pop = zipf_popularity(20, 3, 0.8, 1.4);

    CHECK_THROWS_AS(make_scenario(20, prof, pop, net), std::invalid_argument);

    ScenarioOptions opt;
    opt.renormalize_rates = true;
    auto sc = make_scenario(20, prof, pop, net, opt);
    CHECK(sc.rates_renormalized);
    CHECK(sc.profile.rate_proportionality_spread() <= 1e-12);
    CHECK(sc.profile.rates[0] == Catch::Approx(56600.0));
    CHECK(sc.theta == Catch::Approx(56600.0 / 20e6));
}

TEST_CASE("scenario quantizes sizes onto the grid") {
    auto prof = EncodingProfile::dash({1.0, 2.53}, {1e6, 2.53e6});
    auto sc = make_scenario(4, prof, zipf_popularity(4, 2, 1.0, 0.5), NetworkParams{3e-6, 1e-4, 1e7, 4.0, 5.0});
    CHECK(sc.size_int == std::vector<std::int64_t>{100, 253});
    CHECK(sc.cache_int == 500);
    CHECK_THROWS_AS(quantize_size(1.005, 0.01), std::invalid_argument);
}

TEST_CASE("scenario guards parameters") {
    auto prof = EncodingProfile::svc({1.0}, {1e6});
    auto pop = zipf_popularity(3, 1, 1.0, 0.0);
    NetworkParams net{3e-6, 1e-4, 1e7, 4.0, 2.0};
    CHECK_NOTHROW(make_scenario(3, prof, pop, net));
    NetworkParams bad_alpha = net;
    bad_alpha.alpha = 2.0;
    CHECK_THROWS_AS(make_scenario(3, prof, pop, bad_alpha), std::invalid_argument);
    NetworkParams big_cache = net;
    big_cache.cache_size = 3.0;  // full catalog fits: caching is trivial
    CHECK_THROWS_AS(make_scenario(3, prof, pop, big_cache), std::invalid_argument);
    CHECK_THROWS_AS(make_scenario(2, prof, pop, net), std::invalid_argument);
}

TEST_CASE("popularity validation") {
    CHECK_THROWS_AS(make_popularity({0.5, 0.6}, {{1.0}, {1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(make_popularity({0.5, 0.5}, {{0.7, 0.2}, {0.5, 0.5}}), std::invalid_argument);
    auto pop = make_popularity({0.6, 0.4}, {{0.3, 0.7}, {0.5, 0.5}});
    CHECK(pop.mass(0, 1) == Catch::Approx(0.42));
}
