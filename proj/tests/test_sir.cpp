#include <catch_amalgamated.hpp>
#include <cmath>

#include "mvcache/sir.hpp"

using namespace mvcache;

TEST_CASE("complete beta function against known values") {
    CHECK(beta_complete(1.0, 1.0) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(beta_complete(2.0, 3.0) == Catch::Approx(1.0 / 12.0).epsilon(1e-13));
    // B(1/2, 1/2) = pi
    CHECK(beta_complete(0.5, 0.5) == Catch::Approx(M_PI).epsilon(1e-13));
}

TEST_CASE("upper incomplete beta integral via quadrature") {
    // a = b = 1: integral of 1 over [z, 1]
    CHECK(beta_upper(1.0, 1.0, 0.3) == Catch::Approx(0.7).epsilon(1e-12));
    // a = 2, b = 1: integral of u du = (1 - z^2)/2
    CHECK(beta_upper(2.0, 1.0, 0.25) == Catch::Approx((1.0 - 0.0625) / 2.0).epsilon(1e-12));
    // singular endpoint: a = 1/2, b = 1/2 over (z, 1) equals pi/2 - asin(2z-1)
    double z = 0.1;
    CHECK(beta_upper(0.5, 0.5, z) == Catch::Approx(M_PI / 2.0 - std::asin(2.0 * z - 1.0)).epsilon(1e-11));
}

TEST_CASE("alpha = 4 coefficients match the arcsin closed form") {
    SirKernel kernel(4.0);
    for (double tau : {0.1, 1.0, 10.0, 100.0}) {
        auto [d1, d2] = kernel.d_coefficients(tau);
        double d2_cf = 0.5 * M_PI * std::sqrt(tau);
        double d1_cf = 1.0 - std::sqrt(tau) * std::asin(std::sqrt(1.0 / (1.0 + tau)));
        CHECK(d2 == Catch::Approx(d2_cf).epsilon(1e-11));
        CHECK(d1 == Catch::Approx(d1_cf).epsilon(1e-11));
    }
}

TEST_CASE("coverage kernel shape") {
    SirKernel kernel(4.0);
    CHECK(kernel.coverage(1.0, 0.0) == 0.0);
    CHECK(kernel.coverage(0.0, 0.5) == 1.0);
    // increasing in x, decreasing in tau
    CHECK(kernel.coverage(1.0, 0.9) > kernel.coverage(1.0, 0.3));
    CHECK(kernel.coverage(0.5, 0.5) > kernel.coverage(5.0, 0.5));
    // coverage is a probability
    for (double tau : {0.01, 1.0, 50.0})
        for (double x : {0.1, 0.5, 1.0}) {
            double f = kernel.coverage(tau, x);
            CHECK(f >= 0.0);
            CHECK(f <= 1.0);
        }
    CHECK_THROWS_AS(SirKernel(2.0), std::invalid_argument);
}

TEST_CASE("coverage slope matches a finite difference") {
    SirKernel kernel(3.3);
    auto [d1, d2] = kernel.d_coefficients(2.0);
    double x = 0.4, h = 1e-6;
    double fd = (SirKernel::coverage_from_d(d1, d2, x + h) - SirKernel::coverage_from_d(d1, d2, x - h)) / (2.0 * h);
    CHECK(SirKernel::coverage_slope_from_d(d1, d2, x) == Catch::Approx(fd).epsilon(1e-7));
}

TEST_CASE("tau threshold saturates instead of overflowing") {
    auto t = tau_threshold(0.1, 5.0);
    CHECK(t.tau == Catch::Approx(std::exp2(0.5) - 1.0));
    CHECK_FALSE(t.saturated);
    auto cap = tau_threshold(0.1, 1e6);
    CHECK(cap.saturated);
    CHECK(std::isfinite(cap.tau));
    CHECK(tau_threshold(0.1, 0.0).tau == 0.0);
    CHECK_THROWS_AS(tau_threshold(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("coefficient cache agrees with direct evaluation") {
    SirKernel kernel(4.0);
    DCoefficientCache cov(kernel, 0.1, 0.01);
    // load of 300 grid steps = 3 size units
    double tau = tau_threshold(0.1, 3.0).tau;
    CHECK(cov.coverage(300, 0.6) == Catch::Approx(kernel.coverage(tau, 0.6)).epsilon(1e-14));
    // zero load: threshold test vacuous
    CHECK(cov.coverage(0, 0.2) == 1.0);
    CHECK(cov.coverage(300, 0.0) == 0.0);
}
