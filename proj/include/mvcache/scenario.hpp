#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvcache {

enum class Encoding { SVC, DASH };

inline const char* to_string(Encoding e) { return e == Encoding::SVC ? "svc" : "dash"; }

/// Zipf law over ranks 1..K: entry k is k^-gamma / sum_j j^-gamma.
inline std::vector<double> zipf(std::size_t count, double gamma) {
    if (count == 0) throw std::invalid_argument("zipf: count must be >= 1");
    std::vector<double> p(count);
    double norm = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        p[k] = std::pow(static_cast<double>(k + 1), -gamma);
        norm += p[k];
    }
    for (double& v : p) v /= norm;
    return p;
}

// Per-version sizes and rates for one encoding. For SVC, version ell is the
// first ell layers, so version sizes are prefix sums of layer sizes.
struct EncodingProfile {
    Encoding encoding = Encoding::SVC;
    std::size_t levels = 0;                // L
    std::vector<double> layer_sizes;       // s_ell, SVC only (size units)
    std::vector<double> version_sizes;     // S_ell (size units)
    std::vector<double> rates;             // R_ell (bits/s)

    static EncodingProfile svc(std::vector<double> layer_sizes, std::vector<double> version_rates) {
        EncodingProfile p;
        p.encoding = Encoding::SVC;
        p.levels = layer_sizes.size();
        p.layer_sizes = std::move(layer_sizes);
        p.version_sizes.resize(p.levels);
        double acc = 0.0;
        for (std::size_t i = 0; i < p.levels; ++i) {
            if (p.layer_sizes[i] <= 0.0) throw std::invalid_argument("svc layer sizes must be positive");
            acc += p.layer_sizes[i];
            p.version_sizes[i] = acc;
        }
        p.rates = std::move(version_rates);
        p.validate_shapes();
        return p;
    }

    static EncodingProfile dash(std::vector<double> version_sizes, std::vector<double> version_rates) {
        EncodingProfile p;
        p.encoding = Encoding::DASH;
        p.levels = version_sizes.size();
        p.version_sizes = std::move(version_sizes);
        p.rates = std::move(version_rates);
        p.validate_shapes();
        return p;
    }

    void validate_shapes() const {
        if (levels == 0) throw std::invalid_argument("profile needs at least one quality level");
        if (rates.size() != levels || version_sizes.size() != levels)
            throw std::invalid_argument("profile arrays must have length L");
        for (std::size_t i = 0; i + 1 < levels; ++i)
            if (!(version_sizes[i] < version_sizes[i + 1]))
                throw std::invalid_argument("version sizes must be strictly increasing");
        if (version_sizes.front() <= 0.0) throw std::invalid_argument("version sizes must be positive");
        for (double r : rates)
            if (r <= 0.0) throw std::invalid_argument("rates must be positive");
    }

    // Max relative spread of R_ell / S_ell across levels.
    double rate_proportionality_spread() const {
        double lo = rates[0] / version_sizes[0], hi = lo;
        for (std::size_t i = 1; i < levels; ++i) {
            double r = rates[i] / version_sizes[i];
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        return (hi - lo) / hi;
    }
};

/// Normalized rate threshold: R_1 / (S_1 * W), per size unit.
/// Rejects profiles whose R_ell/S_ell spread exceeds tol.
inline double theta(const EncodingProfile& profile, double bandwidth_hz, double tol = 1e-9) {
    if (bandwidth_hz <= 0.0) throw std::invalid_argument("bandwidth must be positive");
    if (profile.rate_proportionality_spread() > tol)
        throw std::invalid_argument("profile violates rate proportionality beyond tolerance");
    return profile.rates[0] / (profile.version_sizes[0] * bandwidth_hz);
}

struct Popularity {
    std::vector<double> video;                   // a_n, length N
    std::vector<std::vector<double>> quality;    // b_{n,ell}, N rows of length L

    double mass(std::size_t n, std::size_t ell) const { return video[n] * quality[n][ell]; }
};

inline Popularity make_popularity(std::vector<double> a, std::vector<std::vector<double>> b) {
    constexpr double tol = 1e-12;
    double sum = 0.0;
    for (double v : a) {
        if (v < 0.0) throw std::invalid_argument("video popularity must be nonnegative");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("video popularity must sum to 1");
    if (b.size() != a.size()) throw std::invalid_argument("quality popularity needs one row per video");
    for (auto& row : b) {
        double rs = 0.0;
        for (double v : row) {
            if (v < 0.0) throw std::invalid_argument("quality popularity must be nonnegative");
            rs += v;
        }
        if (std::abs(rs - 1.0) > 1e-6 + tol) throw std::invalid_argument("quality popularity rows must sum to 1");
    }
    return Popularity{std::move(a), std::move(b)};
}

/// Zipf(gamma1) over videos, Zipf(gamma2) over quality levels, same row for every video.
inline Popularity zipf_popularity(std::size_t n_videos, std::size_t levels, double gamma1, double gamma2) {
    auto a = zipf(n_videos, gamma1);
    auto row = zipf(levels, gamma2);
    return Popularity{std::move(a), std::vector<std::vector<double>>(n_videos, row)};
}

struct NetworkParams {
    double lambda_b = 0.0;   // helper density, per m^2
    double lambda_u = 0.0;   // user density, per m^2
    double bandwidth = 0.0;  // Hz
    double alpha = 4.0;      // path loss exponent, > 2
    double cache_size = 0.0; // C, size units
};

// Immutable scenario. Version sizes are quantized once onto an integer grid
// so load supports hash exactly; theta is the common R_ell/(S_ell W).
struct Scenario {
    std::size_t n_videos = 0;
    EncodingProfile profile;
    Popularity popularity;
    NetworkParams net;
    double theta = 0.0;            // per size unit
    double size_grid = 0.01;       // size units per grid step
    std::vector<std::int64_t> size_int;  // S_ell on the grid
    std::int64_t cache_int = 0;          // C on the grid
    bool rates_renormalized = false;

    std::size_t levels() const { return profile.levels; }
    double version_size(std::size_t ell) const { return profile.version_sizes[ell]; }
};

inline std::int64_t quantize_size(double size, double grid) {
    double q = size / grid;
    auto r = static_cast<std::int64_t>(std::llround(q));
    if (std::abs(q - static_cast<double>(r)) > 1e-6)
        throw std::invalid_argument("size " + std::to_string(size) + " not representable on grid " + std::to_string(grid));
    return r;
}

struct ScenarioOptions {
    double size_grid = 0.01;
    double rate_tolerance = 1e-9;
    bool renormalize_rates = false;  // set R_ell := (R_1/S_1) * S_ell
};

inline Scenario make_scenario(std::size_t n_videos, EncodingProfile profile, Popularity popularity,
                              NetworkParams net, ScenarioOptions opt = {}) {
    if (n_videos == 0) throw std::invalid_argument("need at least one video");
    if (popularity.video.size() != n_videos) throw std::invalid_argument("popularity length mismatch");
    for (auto& row : popularity.quality)
        if (row.size() != profile.levels) throw std::invalid_argument("quality popularity width mismatch");
    if (net.lambda_b <= 0.0 || net.lambda_u < 0.0 || net.bandwidth <= 0.0 || net.cache_size <= 0.0)
        throw std::invalid_argument("network parameters must be positive");
    if (net.alpha <= 2.0) throw std::invalid_argument("path loss exponent must exceed 2");

    Scenario sc;
    sc.rates_renormalized = false;
    if (opt.renormalize_rates && profile.rate_proportionality_spread() > opt.rate_tolerance) {
        double ratio = profile.rates[0] / profile.version_sizes[0];
        for (std::size_t i = 0; i < profile.levels; ++i) profile.rates[i] = ratio * profile.version_sizes[i];
        sc.rates_renormalized = true;
    }
    sc.theta = theta(profile, net.bandwidth, opt.rate_tolerance);

    double total = 0.0;
    for (double s : profile.version_sizes) total += s;
    double max_store = profile.encoding == Encoding::SVC
                           ? static_cast<double>(n_videos) * profile.version_sizes.back()
                           : static_cast<double>(n_videos) * total;
    if (!(net.cache_size < max_store))
        throw std::invalid_argument("cache size must be smaller than the full catalog");

    sc.n_videos = n_videos;
    sc.size_grid = opt.size_grid;
    sc.size_int.reserve(profile.levels);
    for (double s : profile.version_sizes) sc.size_int.push_back(quantize_size(s, opt.size_grid));
    sc.cache_int = quantize_size(net.cache_size, opt.size_grid);
    sc.profile = std::move(profile);
    sc.popularity = std::move(popularity);
    sc.net = net;
    return sc;
}

}  // namespace mvcache
