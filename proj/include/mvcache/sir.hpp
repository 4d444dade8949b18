#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>

namespace mvcache {

namespace detail {

// Tanh-sinh quadrature of f on (lo, hi); handles integrable endpoint
// singularities. f receives (x - lo, hi - x) so the integrand can evaluate
// endpoint distances without cancellation.
template <typename F>
double tanh_sinh(F&& f, double lo, double hi, double rel_tol = 1e-13) {
    const double half = 0.5 * (hi - lo);
    const double pi_half = 1.5707963267948966;
    // abscissa t maps to x = mid + half*tanh(pi/2*sinh t); distances to the
    // endpoints are half*(1 -/+ tanh), computed via 2/(1+exp(±2u)).
    auto eval_pair = [&](double t) {
        double u = pi_half * std::sinh(t);
        double w = pi_half * std::cosh(t);
        double sech = 1.0 / std::cosh(u);
        double weight = w * sech * sech;
        double from_lo_p = half * 2.0 / (1.0 + std::exp(-2.0 * u));  // x - lo at +t
        double from_hi_p = half * 2.0 / (1.0 + std::exp(2.0 * u));   // hi - x at +t
        double acc = 0.0;
        if (weight > 1e-300) {
            if (from_lo_p > 0.0 && from_hi_p > 0.0) acc += weight * f(from_lo_p, from_hi_p);
            if (t != 0.0 && from_hi_p > 0.0 && from_lo_p > 0.0) acc += weight * f(from_hi_p, from_lo_p);
        }
        return acc;
    };
    const double t_max = 6.5;
    double h = 1.0;
    double sum = eval_pair(0.0);
    for (double t = h; t <= t_max; t += h) sum += eval_pair(t);
    double integral = sum * h * half;
    for (int level = 1; level <= 12; ++level) {
        h *= 0.5;
        for (double t = h; t <= t_max; t += 2.0 * h) sum += eval_pair(t);
        double next = sum * h * half;
        if (level >= 3 && std::abs(next - integral) <= rel_tol * std::abs(next)) return next;
        integral = next;
    }
    return integral;
}

}  // namespace detail

/// Complete beta function B(a,b) via the Gamma identity.
inline double beta_complete(double a, double b) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("beta_complete: arguments must be positive");
    return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

/// Upper incomplete beta integral over u in [z,1] of u^{a-1}(1-u)^{b-1}.
inline double beta_upper(double a, double b, double z) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("beta_upper: arguments must be positive");
    if (!(z > 0.0 && z < 1.0)) throw std::invalid_argument("beta_upper: z must lie in (0,1)");
    return detail::tanh_sinh(
        [&](double from_lo, double from_hi) {
            double u = z + from_lo;           // distance from lower endpoint z
            double one_minus_u = from_hi;     // distance from upper endpoint 1
            return std::pow(u, a - 1.0) * std::pow(one_minus_u, b - 1.0);
        },
        z, 1.0);
}

// SIR coverage kernel for a path loss exponent alpha > 2. The pair
// (D1, D2) captures the physical layer; f(tau, x) is the coverage
// probability given storage probability x.
class SirKernel {
public:
    explicit SirKernel(double alpha) : alpha_(alpha) {
        if (!(alpha > 2.0)) throw std::invalid_argument("SirKernel: alpha must exceed 2");
        a_ = 2.0 / alpha;
        beta_ab_ = beta_complete(a_, 1.0 - a_);
    }

    double alpha() const { return alpha_; }

    /// (D1, D2) at threshold tau > 0.
    std::pair<double, double> d_coefficients(double tau) const {
        if (!(tau > 0.0)) throw std::invalid_argument("d_coefficients: tau must be positive");
        double scale = a_ * std::pow(tau, a_);
        double d2 = scale * beta_ab_;
        double d1 = 1.0 + scale * beta_upper(a_, 1.0 - a_, 1.0 / (1.0 + tau)) - d2;
        return {d1, d2};
    }

    /// Coverage probability f(tau, x) = x / (D2 + D1 x); tau = 0 means the
    /// threshold test is vacuous, so any positive storage probability covers.
    double coverage(double tau, double x) const {
        if (x <= 0.0) return 0.0;
        if (tau <= 0.0) return 1.0;
        auto [d1, d2] = d_coefficients(tau);
        return x / (d2 + d1 * x);
    }

    static double coverage_from_d(double d1, double d2, double x) {
        if (x <= 0.0) return 0.0;
        return x / (d2 + d1 * x);
    }

    /// d/dx of coverage at fixed (D1, D2).
    static double coverage_slope_from_d(double d1, double d2, double x) {
        double den = d2 + d1 * x;
        return d2 / (den * den);
    }

private:
    double alpha_;
    double a_;        // 2/alpha
    double beta_ab_;  // B(2/alpha, 1-2/alpha)
};

struct TauResult {
    double tau = 0.0;
    bool saturated = false;
};

/// tau_k = 2^{k*theta} - 1 for a load of k size units; saturates when the
/// exponent would overflow (coverage is ~0 there anyway).
inline TauResult tau_threshold(double theta, double load, double exponent_cap = 60.0) {
    if (load < 0.0 || theta <= 0.0) throw std::invalid_argument("tau_threshold: need load >= 0, theta > 0");
    double e = load * theta;
    if (e > exponent_cap) return {std::exp2(exponent_cap) - 1.0, true};
    return {std::exp2(e) - 1.0, false};
}

// Memoized (D1, D2) per integer load; used when assembling the STP sum,
// where the same tau_k recurs across (video, level) pairs.
class DCoefficientCache {
public:
    DCoefficientCache(const SirKernel& kernel, double theta, double size_grid)
        : kernel_(kernel), theta_(theta), grid_(size_grid) {}

    // f(tau_k, x) for a load of k grid steps.
    double coverage(std::int64_t load_int, double x) const {
        if (x <= 0.0) return 0.0;
        auto it = cache_.find(load_int);
        if (it == cache_.end()) {
            double load = static_cast<double>(load_int) * grid_;
            TauResult t = tau_threshold(theta_, load);
            std::pair<double, double> d{1.0, 0.0};
            if (t.tau > 0.0) d = kernel_.d_coefficients(t.tau);
            it = cache_.emplace(load_int, d).first;
        }
        auto [d1, d2] = it->second;
        if (d2 == 0.0) return 1.0;  // tau == 0
        return SirKernel::coverage_from_d(d1, d2, x);
    }

private:
    const SirKernel& kernel_;
    double theta_;
    double grid_;
    mutable std::map<std::int64_t, std::pair<double, double>> cache_;
};

}  // namespace mvcache
