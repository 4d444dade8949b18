#include <catch_amalgamated.hpp>

#include "helpers.hpp"
#include "mvcache/simulator.hpp"
#include "mvcache/stp.hpp"

using namespace mvcache;
using testutil::small_scenario;

namespace {

CachingDistribution two_content_distribution(const Scenario& sc) {
    ContentBase base;
    base.mode = sc.profile.encoding;
    base.contents.push_back(CacheContent::from_string("0110", 2, 2));
    base.contents.push_back(CacheContent::from_string("1001", 2, 2));
    return make_distribution(std::move(base), {0.6, 0.4});
}

}  // namespace

TEST_CASE("estimates are deterministic for a given seed, regardless of workers") {
    auto sc = small_scenario(Encoding::DASH, 2, 2, 3.0);
    auto d = two_content_distribution(sc);
    SimConfig cfg;
    cfg.trials = 400;
    cfg.seed = 42;
    cfg.workers = 1;
    auto a = simulate_stp(sc, d, cfg);
    cfg.workers = 7;
    auto b = simulate_stp(sc, d, cfg);
    CHECK(a.estimate == b.estimate);
    CHECK(a.no_helper == b.no_helper);
    cfg.seed = 43;
    auto c = simulate_stp(sc, d, cfg);
    CHECK(a.estimate != c.estimate);  // different realization
}

TEST_CASE("monte carlo agrees with the analytic stp") {
    for (Encoding enc : {Encoding::SVC, Encoding::DASH}) {
        auto sc = small_scenario(enc, 2, 2, 3.0);
        auto d = two_content_distribution(sc);
        auto rep = stp_exact(sc, d);
        SimConfig cfg;
        cfg.trials = 4000;
        cfg.seed = 7;
        cfg.workers = 4;
        auto est = simulate_stp(sc, d, cfg);
        CHECK(std::abs(est.estimate - rep.overall) <= est.half_width + 0.01);
        CHECK(est.half_width > 0.0);
        CHECK(est.trials == 4000);
    }
}

TEST_CASE("empirical load distribution matches the convolution law") {
    auto sc = small_scenario(Encoding::DASH, 2, 2, 3.0, 1e-4);
    auto d = two_content_distribution(sc);
    auto analytic = pmf_load(sc, d, 0, 1);
    SimConfig cfg;
    cfg.trials = 6000;
    cfg.seed = 3;
    cfg.workers = 4;
    auto mc = simulate_load_pmf(sc, d, 0, 1, cfg);
    // compare on the union support; generous tolerance for 6k samples
    std::map<std::int64_t, double> want, got;
    for (std::size_t i = 0; i < analytic.support.size(); ++i) want[analytic.support[i]] = analytic.prob[i];
    for (std::size_t i = 0; i < mc.support.size(); ++i) got[mc.support[i]] = mc.prob[i];
    for (auto [k, p] : want)
        CHECK(std::abs(p - (got.count(k) ? got[k] : 0.0)) <= 0.03);
    for (auto [k, p] : got) CHECK(want.count(k) == 1);  // no impossible loads
    CHECK(mc.total() == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("boundary handling and guards") {
    auto sc = small_scenario(Encoding::DASH, 2, 2, 3.0);
    auto d = two_content_distribution(sc);
    SimConfig cfg;
    cfg.trials = 300;
    cfg.seed = 9;
    cfg.boundary = SimConfig::Boundary::Plain;
    CHECK_NOTHROW(simulate_stp(sc, d, cfg));
    cfg.trials = 0;
    CHECK_THROWS_AS(simulate_stp(sc, d, cfg), std::invalid_argument);
    cfg.trials = 10;
    cfg.window_side = 100.0;  // far too few helpers expected inside
    CHECK_THROWS_AS(simulate_stp(sc, d, cfg), std::invalid_argument);
}

TEST_CASE("unserved handling modes") {
    // a distribution that never stores video 2: requests for it always fail
    auto sc = small_scenario(Encoding::DASH, 2, 1, 1.0, 1e-4, 0.0, 0.0);
    ContentBase base;
    base.mode = Encoding::DASH;
    base.contents.push_back(CacheContent::from_string("10", 2, 1));
    auto d = make_distribution(std::move(base), {1.0});
    SimConfig cfg;
    cfg.trials = 800;
    cfg.seed = 5;
    auto strict = simulate_stp(sc, d, cfg);
    CHECK(strict.no_helper > 0);  // video 2 draws about half the requests
    cfg.fail_without_helper = false;
    auto dropped = simulate_stp(sc, d, cfg);
    CHECK(dropped.trials == 800 - dropped.no_helper);
    CHECK(dropped.estimate >= strict.estimate);
}
