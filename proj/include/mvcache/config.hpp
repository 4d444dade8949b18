#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvcache/content.hpp"
#include "mvcache/experiments.hpp"
#include "mvcache/scenario.hpp"
#include "mvcache/simulator.hpp"

namespace mvcache {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Sectioned key-value configuration text: `[section]` headers, `key = value`
/// lines, `#` comments. The schema carries an explicit top-level `version`.
class Config {
public:
    static Config parse(const std::string& text) {
        Config cfg;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
                cfg.data_[section];
                continue;
            }
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("line " + std::to_string(lineno) + ": expected `key = value`, got `" + line + "`");
            std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
            if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
            cfg.data_[section][key] = value;
        }
        if (cfg.get_or(std::string{}, "version", std::string{}).empty())
            throw ConfigError("missing top-level `version` key");
        return cfg;
    }

    static Config load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot open config file: " + path);
        std::ostringstream ss;
        ss << f.rdbuf();
        return parse(ss.str());
    }

    void set(const std::string& section, const std::string& key, const std::string& value) {
        data_[section][key] = value;
    }

    bool has(const std::string& section, const std::string& key) const {
        auto s = data_.find(section);
        return s != data_.end() && s->second.count(key) > 0;
    }

    bool has_section(const std::string& section) const { return data_.count(section) > 0; }

    std::string require(const std::string& section, const std::string& key) const {
        auto s = data_.find(section);
        if (s == data_.end()) throw ConfigError("missing section [" + section + "]");
        auto k = s->second.find(key);
        if (k == s->second.end()) throw ConfigError("missing key `" + key + "` in section [" + section + "]");
        return k->second;
    }

    std::string get_or(const std::string& section, const std::string& key, std::string fallback) const {
        return has(section, key) ? data_.at(section).at(key) : std::move(fallback);
    }

    double number(const std::string& section, const std::string& key) const {
        return to_number(require(section, key), section, key);
    }

    double number_or(const std::string& section, const std::string& key, double fallback) const {
        return has(section, key) ? number(section, key) : fallback;
    }

    std::vector<double> numbers(const std::string& section, const std::string& key) const {
        std::istringstream ss(require(section, key));
        std::vector<double> out;
        std::string tok;
        while (ss >> tok) out.push_back(to_number(tok, section, key));
        if (out.empty()) throw ConfigError("empty list for `" + key + "` in section [" + section + "]");
        return out;
    }

    std::vector<std::string> words(const std::string& section, const std::string& key) const {
        std::istringstream ss(require(section, key));
        std::vector<std::string> out;
        std::string tok;
        while (ss >> tok) out.push_back(tok);
        return out;
    }

    bool flag_or(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        std::string v = data_.at(section).at(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError("`" + key + "` in [" + section + "] must be a boolean, got `" + v + "`");
    }

    /// FNV-1a over the canonical (sorted) section/key/value dump.
    std::uint64_t fingerprint() const {
        std::uint64_t h = 1469598103934665603ULL;
        auto mix = [&](const std::string& s) {
            for (unsigned char c : s) {
                h ^= c;
                h *= 1099511628211ULL;
            }
            h ^= 0x1f;
            h *= 1099511628211ULL;
        };
        for (const auto& [sec, kv] : data_) {
            mix(sec);
            for (const auto& [k, v] : kv) {
                mix(k);
                mix(v);
            }
        }
        return h;
    }

private:
    static std::string trim(std::string s) {
        auto issp = [](unsigned char c) { return std::isspace(c); };
        while (!s.empty() && issp(s.front())) s.erase(s.begin());
        while (!s.empty() && issp(s.back())) s.pop_back();
        return s;
    }

    static double to_number(const std::string& v, const std::string& section, const std::string& key) {
        try {
            std::size_t pos = 0;
            double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw ConfigError("`" + key + "` in [" + section + "] must be a number, got `" + v + "`");
        }
    }

    std::map<std::string, std::map<std::string, std::string>> data_;
};

inline Scenario scenario_from_config(const Config& cfg) {
    std::string mode = cfg.require("catalog", "mode");
    if (mode != "svc" && mode != "dash") throw ConfigError("catalog.mode must be `svc` or `dash`");
    Encoding enc = mode == "svc" ? Encoding::SVC : Encoding::DASH;

    EncodingProfile profile;
    if (cfg.get_or("catalog", "profile", "") == "reference") {
        profile = reference_profile(enc);
    } else {
        std::vector<double> sizes =
            enc == Encoding::SVC ? cfg.numbers("catalog", "layer_sizes") : cfg.numbers("catalog", "version_sizes");
        std::vector<double> rates;
        if (cfg.has("catalog", "rate_per_size")) {
            // common rate per size unit; version rates proportional to version sizes
            double rps = cfg.number("catalog", "rate_per_size");
            if (rps <= 0.0) throw ConfigError("catalog.rate_per_size must be positive");
            double acc = 0.0;
            for (double s : sizes) {
                acc = enc == Encoding::SVC ? acc + s : s;
                rates.push_back(rps * acc);
            }
        } else {
            rates = cfg.numbers("catalog", "rates");
        }
        profile = enc == Encoding::SVC ? EncodingProfile::svc(std::move(sizes), std::move(rates))
                                       : EncodingProfile::dash(std::move(sizes), std::move(rates));
    }

    auto n_videos = static_cast<std::size_t>(cfg.number("catalog", "videos"));

    Popularity pop;
    if (cfg.has("popularity", "video")) {
        std::vector<double> a = cfg.numbers("popularity", "video");
        std::vector<std::vector<double>> b;
        for (std::size_t n = 0; n < a.size(); ++n) {
            std::string key = "quality_" + std::to_string(n + 1);
            b.push_back(cfg.has("popularity", key) ? cfg.numbers("popularity", key) : cfg.numbers("popularity", "quality"));
        }
        pop = make_popularity(std::move(a), std::move(b));
    } else if (cfg.has_section("popularity")) {
        pop = zipf_popularity(n_videos, profile.levels, cfg.number("popularity", "gamma1"),
                              cfg.number("popularity", "gamma2"));
    } else {
        throw ConfigError("missing section [popularity]");
    }

    NetworkParams net;
    net.lambda_b = cfg.number("network", "lambda_b");
    net.lambda_u = cfg.number("network", "lambda_u");
    net.bandwidth = cfg.number("network", "bandwidth");
    net.alpha = cfg.number_or("network", "alpha", 4.0);
    net.cache_size = cfg.number("network", "cache");

    ScenarioOptions opt;
    opt.size_grid = cfg.number_or("catalog", "size_grid", 0.01);
    opt.renormalize_rates = cfg.flag_or("catalog", "renormalize_rates", false);
    try {
        return make_scenario(n_videos, std::move(profile), std::move(pop), net, opt);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid scenario: ") + e.what());
    }
}

/// Distribution described by [scheme]: `proposed`, a named baseline, or an
/// explicit base with probabilities.
inline CachingDistribution distribution_from_config(const Config& cfg, const Scenario& sc) {
    std::string kind = cfg.get_or("scheme", "kind", "proposed");
    if (kind == "proposed") return proposed_distribution(sc);
    if (kind == "baseline") {
        BaselineSpec spec;
        std::string fam = cfg.require("scheme", "baseline");
        if (fam == "most_popular")
            spec.family = BaselineFamily::MostPopular;
        else if (fam == "uniform")
            spec.family = BaselineFamily::UniformDist;
        else
            throw ConfigError("scheme.baseline must be `most_popular` or `uniform`");
        std::string ver = cfg.get_or("scheme", "baseline_version", "1");
        if (ver == "all") {
            spec.all_versions = true;
        } else {
            try {
                unsigned long v = std::stoul(ver);
                if (v == 0) throw std::out_of_range(ver);
                spec.version = v - 1;
            } catch (const std::exception&) {
                throw ConfigError("scheme.baseline_version must be a positive level index or `all`");
            }
        }
        try {
            return baseline_distribution(spec, sc);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("invalid baseline: ") + e.what());
        }
    }
    if (kind == "explicit") {
        ContentBase base;
        base.mode = sc.profile.encoding;
        for (const auto& s : cfg.words("scheme", "contents"))
            base.contents.push_back(CacheContent::from_string(s, sc.n_videos, sc.levels()));
        std::vector<double> p = cfg.numbers("scheme", "p");
        double sum = 0.0;
        for (double v : p) sum += v;
        if (std::abs(sum - 1.0) > 1e-9)
            throw ConfigError("scheme.p must sum to 1 (residual " + std::to_string(sum - 1.0) + ")");
        for (const auto& c : base.contents)
            if (!is_feasible(c, sc)) throw ConfigError("scheme content " + c.to_string() + " is infeasible");
        return make_distribution(std::move(base), std::move(p));
    }
    throw ConfigError("scheme.kind must be `proposed`, `baseline` or `explicit`");
}

inline SimConfig simconfig_from_config(const Config& cfg) {
    SimConfig sim;
    sim.trials = static_cast<std::size_t>(cfg.number_or("run", "trials", 10000));
    sim.seed = static_cast<std::uint64_t>(cfg.number_or("run", "seed", 1));
    sim.window_side = cfg.number_or("run", "window", 0.0);
    sim.workers = static_cast<std::size_t>(cfg.number_or("run", "workers", 1));
    std::string boundary = cfg.get_or("run", "boundary", "torus");
    if (boundary == "torus")
        sim.boundary = SimConfig::Boundary::Torus;
    else if (boundary == "plain")
        sim.boundary = SimConfig::Boundary::Plain;
    else
        throw ConfigError("run.boundary must be `torus` or `plain`");
    sim.fail_without_helper = cfg.flag_or("run", "fail_without_helper", true);
    return sim;
}

}  // namespace mvcache
