#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvcache/content.hpp"
#include "mvcache/scenario.hpp"
#include "mvcache/sir.hpp"
#include "mvcache/stp.hpp"

namespace mvcache {

/// (D1, D2) at the asymptotic threshold tau_C.
inline std::pair<double, double> asymptotic_d(const Scenario& sc) {
    SirKernel kernel(sc.net.alpha);
    TauResult t = tau_threshold(sc.theta, sc.net.cache_size);
    return kernel.d_coefficients(t.tau);
}

struct RelaxedSolution {
    Marginals t_star;
    double objective = 0.0;    // q_ub
    double kkt_residual = 0.0;
    double budget_slack = 0.0;  // C - sum S T
    std::size_t iterations = 0;
    bool converged = true;
};

struct SolverOptions {
    std::size_t max_iterations = 200000;
    double kkt_tolerance = 1e-6;
    double objective_tolerance = 1e-10;
};

struct SolverDiagnostics : std::runtime_error {
    RelaxedSolution best;
    SolverDiagnostics(std::string msg, RelaxedSolution b) : std::runtime_error(std::move(msg)), best(std::move(b)) {}
};

namespace detail {

inline void project_nonneg_capped_sum(double* row, std::size_t len, double cap) {
    // projection onto {t >= 0, sum t <= cap}
    double sum = 0.0;
    for (std::size_t i = 0; i < len; ++i) sum += std::max(row[i], 0.0);
    if (sum <= cap) {
        for (std::size_t i = 0; i < len; ++i) row[i] = std::max(row[i], 0.0);
        return;
    }
    // project onto the simplex {t >= 0, sum t = cap}
    std::vector<double> u(row, row + len);
    std::sort(u.begin(), u.end(), std::greater<>());
    double css = 0.0, theta_shift = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        css += u[i];
        double cand = (css - cap) / static_cast<double>(i + 1);
        if (u[i] - cand > 0.0) theta_shift = cand;
    }
    for (std::size_t i = 0; i < len; ++i) row[i] = std::max(row[i] - theta_shift, 0.0);
}

inline void project_box01(double* v, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) v[i] = std::clamp(v[i], 0.0, 1.0);
}

}  // namespace detail

// Feasible region of the relaxed problems over T: nonnegativity, per-video
// version-sum cap of 1 (SVC) or the unit box (DASH), and the weighted cache
// budget. Projection via Dykstra's alternating scheme; entries with zero
// popularity mass are pinned to zero.
class RelaxedFeasibleSet {
public:
    RelaxedFeasibleSet(const Scenario& sc) : n_(sc.n_videos), l_(sc.levels()), svc_(sc.profile.encoding == Encoding::SVC) {
        weights_.resize(n_ * l_);
        mask_.resize(n_ * l_);
        for (std::size_t n = 0; n < n_; ++n)
            for (std::size_t ell = 0; ell < l_; ++ell) {
                weights_[n * l_ + ell] = sc.profile.version_sizes[ell];
                mask_[n * l_ + ell] = sc.popularity.mass(n, ell) > 0.0;
            }
        budget_ = sc.net.cache_size;
    }

    // Exact projection. With mu the budget multiplier, the minimizer is
    // proj_structure(y - mu * w); the used budget is nonincreasing in mu,
    // so mu solves by bisection with complementary slackness.
    void project(std::vector<double>& x) const {
        std::vector<double> y = x;
        auto attempt = [&](double mu) {
            for (std::size_t i = 0; i < x.size(); ++i) x[i] = y[i] - mu * weights_[i];
            project_structure(x);
            double used = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) used += weights_[i] * x[i];
            return used;
        };
        if (attempt(0.0) <= budget_) return;
        double lo = 0.0, hi = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (mask_[i]) hi = std::max(hi, y[i] / weights_[i]);
        hi += 1.0;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            (attempt(mid) > budget_ ? lo : hi) = mid;
        }
        attempt(hi);
    }

    double budget_slack(const std::vector<double>& x) const {
        double used = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) used += weights_[i] * x[i];
        return budget_ - used;
    }

private:
    void project_structure(std::vector<double>& x) const {
        if (svc_)
            for (std::size_t n = 0; n < n_; ++n) detail::project_nonneg_capped_sum(x.data() + n * l_, l_, 1.0);
        else
            detail::project_box01(x.data(), x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            if (!mask_[i]) x[i] = 0.0;
    }

    std::size_t n_, l_;
    bool svc_;
    std::vector<double> weights_;
    std::vector<std::uint8_t> mask_;
    double budget_ = 0.0;
};

namespace detail {

struct PgOutcome {
    std::vector<double> x;
    double objective = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

// FISTA-style accelerated projected gradient ascent with backtracking and
// objective restarts, for smooth concave objectives.
template <typename Obj, typename Grad, typename Proj>
PgOutcome pg_maximize(std::vector<double> x, Obj&& obj, Grad&& grad, Proj&& proj, const SolverOptions& opt) {
    proj(x);
    std::vector<double> y = x, x_prev = x, g(x.size());
    double step = 1.0, t_momentum = 1.0;
    double fx = obj(x);
    PgOutcome out;
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
        grad(y, g);
        // backtracking on the majorization condition at y
        std::vector<double> cand;
        double fy = obj(y);
        for (int bt = 0; bt < 60; ++bt) {
            cand = y;
            for (std::size_t i = 0; i < cand.size(); ++i) cand[i] += step * g[i];
            proj(cand);
            double lhs = obj(cand), quad = 0.0, lin = 0.0;
            for (std::size_t i = 0; i < cand.size(); ++i) {
                double d = cand[i] - y[i];
                lin += g[i] * d;
                quad += d * d;
            }
            if (lhs >= fy + lin - quad / (2.0 * step) - 1e-15) break;
            step *= 0.5;
        }
        double f_cand = obj(cand);
        if (f_cand < fx) {  // momentum overshoot: restart from the best point
            t_momentum = 1.0;
            y = x;
            grad(y, g);
            cand = y;
            for (std::size_t i = 0; i < cand.size(); ++i) cand[i] += step * g[i];
            proj(cand);
            f_cand = obj(cand);
        }
        x_prev = x;
        double f_old = fx;
        if (f_cand >= fx) {
            x = cand;
            fx = f_cand;
        }
        double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
        y = x;
        double beta = (t_momentum - 1.0) / t_next;
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += beta * (x[i] - x_prev[i]);
        t_momentum = t_next;
        step *= 1.3;  // allow the step to grow back

        if ((it & 15) == 15 || std::abs(fx - f_old) <= opt.objective_tolerance) {
            grad(x, g);
            std::vector<double> probe = x;
            for (std::size_t i = 0; i < probe.size(); ++i) probe[i] += g[i];
            proj(probe);
            double r = 0.0;
            for (std::size_t i = 0; i < probe.size(); ++i) r = std::max(r, std::abs(probe[i] - x[i]));
            if (r <= opt.kkt_tolerance && std::abs(fx - f_old) <= opt.objective_tolerance) {
                out.x = std::move(x);
                out.objective = fx;
                out.residual = r;
                out.iterations = it + 1;
                out.converged = true;
                return out;
            }
            out.residual = r;
        }
        out.iterations = it + 1;
    }
    out.x = std::move(x);
    out.objective = fx;
    return out;
}

}  // namespace detail

inline Marginals vector_to_marginals(const Scenario& sc, const std::vector<double>& x) {
    Marginals t(sc.n_videos, sc.levels());
    t.t = x;
    return t;
}

/// Gradient of the asymptotic objective with respect to T.
inline void asymptotic_gradient(const Scenario& sc, double d1, double d2, const std::vector<double>& x,
                                std::vector<double>& g) {
    const std::size_t l = sc.levels();
    std::fill(g.begin(), g.end(), 0.0);
    if (sc.profile.encoding == Encoding::DASH) {
        for (std::size_t n = 0; n < sc.n_videos; ++n)
            for (std::size_t ell = 0; ell < l; ++ell)
                g[n * l + ell] = sc.popularity.mass(n, ell) * SirKernel::coverage_slope_from_d(d1, d2, x[n * l + ell]);
    } else {
        for (std::size_t n = 0; n < sc.n_videos; ++n) {
            double tail = 0.0;
            // accumulate from the top level down: dq/dT_{n,j} sums slopes of all ell <= j
            std::vector<double> tails(l);
            for (std::size_t ell = l; ell-- > 0;) {
                tail += x[n * l + ell];
                tails[ell] = tail;
            }
            double acc = 0.0;
            for (std::size_t ell = 0; ell < l; ++ell) {
                acc += sc.popularity.mass(n, ell) * SirKernel::coverage_slope_from_d(d1, d2, tails[ell]);
                g[n * l + ell] = acc;
            }
        }
    }
}

inline double asymptotic_objective(const Scenario& sc, double d1, double d2, const std::vector<double>& x) {
    Marginals t(sc.n_videos, sc.levels());
    t.t = x;
    return stp_asymptotic_value(sc, t, d1, d2);
}

/// First-order solver for the relaxed problems (either encoding). Primary
/// path for SVC; independent cross-check for the DASH water-filling.
inline RelaxedSolution solve_relaxed_gradient(const Scenario& sc, SolverOptions opt = {}) {
    auto [d1, d2] = asymptotic_d(sc);
    RelaxedFeasibleSet feas(sc);
    std::vector<double> x0(sc.n_videos * sc.levels(), 0.0);
    auto outcome = detail::pg_maximize(
        std::move(x0), [&](const std::vector<double>& v) { return asymptotic_objective(sc, d1, d2, v); },
        [&](const std::vector<double>& v, std::vector<double>& g) { asymptotic_gradient(sc, d1, d2, v, g); },
        [&](std::vector<double>& v) { feas.project(v); }, opt);
    RelaxedSolution sol;
    sol.t_star = vector_to_marginals(sc, outcome.x);
    sol.objective = outcome.objective;
    sol.kkt_residual = outcome.residual;
    sol.budget_slack = feas.budget_slack(outcome.x);
    sol.iterations = outcome.iterations;
    sol.converged = outcome.converged;
    if (!outcome.converged) throw SolverDiagnostics("relaxed solver did not reach the requested tolerance", sol);
    return sol;
}

inline RelaxedSolution solve_relaxed_svc(const Scenario& sc, SolverOptions opt = {}) {
    if (sc.profile.encoding != Encoding::SVC) throw std::invalid_argument("scenario is not SVC");
    return solve_relaxed_gradient(sc, opt);
}

/// Reverse water-filling solution of the relaxed DASH problem: closed form
/// in the budget multiplier, found by bisection.
inline RelaxedSolution solve_relaxed_dash(const Scenario& sc, double budget_rel_tol = 1e-8) {
    if (sc.profile.encoding != Encoding::DASH) throw std::invalid_argument("scenario is not DASH");
    auto [d1, d2] = asymptotic_d(sc);
    const std::size_t l = sc.levels();
    double total_mass = 0.0;
    for (std::size_t n = 0; n < sc.n_videos; ++n)
        for (std::size_t ell = 0; ell < l; ++ell) total_mass += sc.popularity.mass(n, ell);
    if (!(total_mass > 0.0)) throw std::invalid_argument("popularity is identically zero");

    auto t_of_v = [&](double v, Marginals& t) {
        double used = 0.0;
        for (std::size_t n = 0; n < sc.n_videos; ++n)
            for (std::size_t ell = 0; ell < l; ++ell) {
                double ab = sc.popularity.mass(n, ell);
                double s = sc.profile.version_sizes[ell];
                double val = 0.0;
                if (ab > 0.0) {
                    val = (std::sqrt(ab * d2 / (v * s)) - d2) / d1;
                    val = std::clamp(val, 0.0, 1.0);
                }
                t.at(n, ell) = val;
                used += s * val;
            }
        return used;
    };

    // v_hi drives every entry to zero; budget(v) is continuous and nonincreasing
    double v_hi = 0.0;
    for (std::size_t n = 0; n < sc.n_videos; ++n)
        for (std::size_t ell = 0; ell < l; ++ell) {
            double ab = sc.popularity.mass(n, ell);
            if (ab > 0.0) v_hi = std::max(v_hi, ab / (d2 * sc.profile.version_sizes[ell]));
        }
    v_hi *= 1.0 + 1e-9;
    double v_lo = 1e-16 * v_hi;

    Marginals t(sc.n_videos, l);
    double target = sc.net.cache_size;
    if (t_of_v(v_lo, t) <= target) {
        // budget inactive even at (near) zero price: everything cacheable
        v_lo = 0.0;
        t_of_v(1e-300, t);
    } else {
        for (int it = 0; it < 500; ++it) {
            double mid = 0.5 * (v_lo + v_hi);
            double used = t_of_v(mid, t);
            if (std::abs(used - target) <= budget_rel_tol * target) {
                v_lo = v_hi = mid;
                break;
            }
            (used > target ? v_lo : v_hi) = mid;
        }
        t_of_v(0.5 * (v_lo + v_hi), t);
    }

    RelaxedSolution sol;
    sol.t_star = t;
    sol.objective = stp_asymptotic_value(sc, t, d1, d2);
    RelaxedFeasibleSet feas(sc);
    sol.budget_slack = feas.budget_slack(t.t);
    // natural KKT residual via the projected unit gradient step
    std::vector<double> probe = t.t, g(t.t.size());
    asymptotic_gradient(sc, d1, d2, t.t, g);
    for (std::size_t i = 0; i < probe.size(); ++i) probe[i] += g[i];
    feas.project(probe);
    double r = 0.0;
    for (std::size_t i = 0; i < probe.size(); ++i) r = std::max(r, std::abs(probe[i] - t.t[i]));
    sol.kkt_residual = r;
    sol.iterations = 0;
    return sol;
}

inline RelaxedSolution solve_relaxed(const Scenario& sc) {
    return sc.profile.encoding == Encoding::SVC ? solve_relaxed_svc(sc) : solve_relaxed_dash(sc);
}

struct ExactSolution {
    CachingDistribution distribution;
    double objective = 0.0;  // q_star of the asymptotic objective
    double kkt_residual = 0.0;
    bool converged = true;
};

/// Direct solve of the asymptotic objective over the caching distribution
/// simplex. Exponential-base instances only; guarded by `cap`.
inline ExactSolution solve_exact(const Scenario& sc, const ContentBase& base, std::size_t cap = 5000,
                                 SolverOptions opt = {}) {
    if (base.contents.empty()) throw std::invalid_argument("empty content base");
    if (base.contents.size() > cap)
        throw CapacityError("content base has " + std::to_string(base.contents.size()) +
                            " entries, above the exact-solver cap; use the two-stage relax-then-pack path");
    auto [d1, d2] = asymptotic_d(sc);
    const std::size_t l = sc.levels(), nb = base.contents.size();
    const bool svc = sc.profile.encoding == Encoding::SVC;

    auto to_marg = [&](const std::vector<double>& p, Marginals& t) {
        std::fill(t.t.begin(), t.t.end(), 0.0);
        for (std::size_t i = 0; i < nb; ++i) {
            if (p[i] == 0.0) continue;
            const auto& c = base.contents[i];
            for (std::size_t k = 0; k < c.x.size(); ++k)
                if (c.x[k]) t.t[k] += p[i];
        }
    };
    Marginals t(sc.n_videos, l);
    auto obj = [&](const std::vector<double>& p) {
        to_marg(p, t);
        return stp_asymptotic_value(sc, t, d1, d2);
    };
    auto grad = [&](const std::vector<double>& p, std::vector<double>& g) {
        to_marg(p, t);
        // slope of each (n, ell) term at the current marginals
        Marginals slope(sc.n_videos, l);
        for (std::size_t n = 0; n < sc.n_videos; ++n)
            for (std::size_t ell = 0; ell < l; ++ell) {
                double x = svc ? t.tail(n, ell) : t.at(n, ell);
                slope.at(n, ell) = sc.popularity.mass(n, ell) * SirKernel::coverage_slope_from_d(d1, d2, x);
            }
        for (std::size_t i = 0; i < nb; ++i) {
            const auto& c = base.contents[i];
            double gi = 0.0;
            for (std::size_t n = 0; n < sc.n_videos; ++n) {
                if (svc) {
                    std::size_t u = c.stored_level(n);
                    for (std::size_t ell = 0; ell < u; ++ell) gi += slope.at(n, ell);
                } else {
                    for (std::size_t ell = 0; ell < l; ++ell)
                        if (c.at(n, ell)) gi += slope.at(n, ell);
                }
            }
            g[i] = gi;
        }
    };
    auto proj = [&](std::vector<double>& p) {
        // probability simplex
        double sum = 0.0;
        for (double v : p) sum += std::max(v, 0.0);
        std::vector<double> u = p;
        std::sort(u.begin(), u.end(), std::greater<>());
        double css = 0.0, shift = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            css += u[i];
            double cand = (css - 1.0) / static_cast<double>(i + 1);
            if (u[i] - cand > 0.0) shift = cand;
        }
        for (double& v : p) v = std::max(v - shift, 0.0);
        (void)sum;
    };

    std::vector<double> p0(nb, 1.0 / static_cast<double>(nb));
    auto outcome = detail::pg_maximize(std::move(p0), obj, grad, proj, opt);
    ExactSolution sol;
    sol.distribution = CachingDistribution{base, outcome.x};
    sol.objective = outcome.objective;
    sol.kkt_residual = outcome.residual;
    sol.converged = outcome.converged;
    return sol;
}

// Validation report for the closed-form optimality structure of the relaxed
// optima (SVC properties (i)-(iii); DASH size-normalized ordering).
struct OptimalityReport {
    double zero_when_dominated = 0.0;    // SVC (i): max T over dominated (n, ell)
    double monotone_under_sqrt_gap = 0.0;  // SVC (ii)
    double tail_ordering = 0.0;          // SVC (iii)
    double dash_ordering = 0.0;          // DASH Lemma-style ordering
    std::string worst_index;

    bool ok(double tol) const {
        return zero_when_dominated <= tol && monotone_under_sqrt_gap <= tol && tail_ordering <= tol &&
               dash_ordering <= tol;
    }
};

inline OptimalityReport check_optimality_properties(const Marginals& t, const Scenario& sc, double positivity_tol = 1e-9) {
    OptimalityReport rep;
    const std::size_t l = sc.levels();
    auto note = [&](double& slot, double violation, std::size_t n, std::size_t ell, const char* tag) {
        if (violation > slot) {
            slot = violation;
            rep.worst_index = std::string(tag) + "(" + std::to_string(n) + "," + std::to_string(ell) + ")";
        }
    };
    if (sc.profile.encoding == Encoding::SVC) {
        const auto& s = sc.profile.layer_sizes;
        for (std::size_t n = 0; n < sc.n_videos; ++n) {
            const auto& b = sc.popularity.quality[n];
            for (std::size_t ell = 0; ell + 1 < l; ++ell)
                if (b[ell] / s[ell] <= b[ell + 1] / s[ell + 1]) note(rep.zero_when_dominated, t.at(n, ell), n, ell, "i");
            bool all_pos = true;
            for (std::size_t j = 0; j < l; ++j) all_pos = all_pos && t.at(n, j) > positivity_tol;
            if (all_pos)
                for (std::size_t ell = 0; ell + 2 < l; ++ell) {
                    double g0 = std::sqrt(b[ell] / s[ell]) - std::sqrt(b[ell + 1] / s[ell + 1]);
                    double g1 = std::sqrt(b[ell + 1] / s[ell + 1]) - std::sqrt(b[ell + 2] / s[ell + 2]);
                    if (g1 >= g0) note(rep.monotone_under_sqrt_gap, t.at(n, ell) - t.at(n, ell + 1), n, ell, "ii");
                }
        }
        for (std::size_t n1 = 0; n1 < sc.n_videos; ++n1)
            for (std::size_t n2 = 0; n2 < sc.n_videos; ++n2) {
                if (n1 == n2) continue;
                bool pos = true;
                for (std::size_t j = 0; j < l; ++j)
                    pos = pos && t.at(n1, j) > positivity_tol && t.at(n2, j) > positivity_tol;
                if (!pos) continue;
                for (std::size_t ell = 0; ell < l; ++ell)
                    if (sc.popularity.mass(n1, ell) >= sc.popularity.mass(n2, ell))
                        note(rep.tail_ordering, t.tail(n2, ell) - t.tail(n1, ell), n1, ell, "iii");
            }
    } else {
        for (std::size_t n1 = 0; n1 < sc.n_videos; ++n1)
            for (std::size_t ell = 0; ell < l; ++ell)
                for (std::size_t n2 = 0; n2 < sc.n_videos; ++n2)
                    for (std::size_t j = 0; j < l; ++j) {
                        double g1 = sc.popularity.mass(n1, ell) / sc.profile.version_sizes[ell];
                        double g2 = sc.popularity.mass(n2, j) / sc.profile.version_sizes[j];
                        if (g1 >= g2) note(rep.dash_ordering, t.at(n2, j) - t.at(n1, ell), n1, ell, "dash");
                    }
    }
    return rep;
}

}  // namespace mvcache
