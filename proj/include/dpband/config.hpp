#pragma once

// Experiment configuration: a flat, sectioned key = value text format.
//
//   # comment
//   [geometry]
//   d = 1.0
//   trap = rect 0.5 0.0 0.5 0.5    # none | rect CX CY W H | poly X Y X Y ...
//   a = 1.0
//   coupling = linear              # linear | power COEF EXPONENT
//   margin = 0.0
//   [numerics]
//   h = 0.03125
//   phi_count = 17
//   k_max = 5
//   tol = 1e-9
//   dense_threshold = 3000
//   seed = 11400714819323198485
//   [study]
//   epsilons = 0.4 0.2 0.1 0.05
//   window = 20.0
//   output_dir = out
//
// Unknown sections or keys, duplicate keys, and malformed values are
// rejected with the offending line and column.

#include "dpband/eigensolver.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace dpband {

class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, int col, const std::string& msg)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
          line(line),
          col(col) {}
    int line;
    int col;
};

struct ExperimentConfig {
    // geometry
    double d = 1.0;
    std::optional<Polygon> trap;
    double a = 1.0;
    CouplingRule rule;
    double margin = 0.0;
    // numerics
    double h = 1.0 / 32;
    int phi_count = 17;
    int k_max = 5;
    double tol = 1e-9;
    int dense_threshold = 3000;
    std::uint64_t seed = 0x9e3779b97f4a7c15ull;
    // study
    std::vector<double> epsilons = {0.4, 0.2, 0.1, 0.05};
    double window = 20.0;
    std::string output_dir = "out";

    CellGeometry geometry(double epsilon = 1.0) const {
        CellGeometry g;
        g.d = d;
        g.trap = trap;
        g.a = a;
        g.rule = rule;
        g.inside_margin = margin;
        g.epsilon = epsilon;
        return g;
    }
    EigOptions eig_options() const {
        EigOptions o;
        o.tol = tol;
        o.dense_threshold = dense_threshold;
        o.seed = seed;
        return o;
    }
};

namespace detail {

inline std::string trim(const std::string& s, std::size_t* start_off = nullptr) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) {
        if (start_off) *start_off = s.size();
        return {};
    }
    if (start_off) *start_off = b;
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream iss(s);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

inline double parse_double_tok(const std::string& tok, int line, int col) {
    double v = 0.0;
    const char* b = tok.data();
    const char* e = b + tok.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) throw ConfigError(line, col, "expected a number, got '" + tok + "'");
    return v;
}

inline long long parse_int_tok(const std::string& tok, int line, int col) {
    long long v = 0;
    const char* b = tok.data();
    const char* e = b + tok.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) throw ConfigError(line, col, "expected an integer, got '" + tok + "'");
    return v;
}

} // namespace detail

inline ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string section;
    std::set<std::string> seen;
    std::string raw;
    int line_no = 0;

    while (std::getline(in, raw)) {
        ++line_no;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::size_t off = 0;
        const std::string line = detail::trim(raw, &off);
        if (line.empty()) continue;
        const int col0 = static_cast<int>(off) + 1;

        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(line_no, col0, "unterminated section header");
            section = line.substr(1, line.size() - 2);
            if (section != "geometry" && section != "numerics" && section != "study")
                throw ConfigError(line_no, col0, "unknown section [" + section + "]");
            continue;
        }
        if (section.empty()) throw ConfigError(line_no, col0, "key outside of any section");

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(line_no, col0, "expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        std::size_t voff = 0;
        const std::string value = detail::trim(line.substr(eq + 1), &voff);
        const int vcol = col0 + static_cast<int>(eq) + 1 + static_cast<int>(voff);
        if (key.empty()) throw ConfigError(line_no, col0, "empty key");
        if (value.empty()) throw ConfigError(line_no, vcol, "empty value for '" + key + "'");
        const std::string qualified = section + "." + key;
        if (!seen.insert(qualified).second)
            throw ConfigError(line_no, col0, "duplicate key '" + qualified + "'");

        auto num = [&] { return detail::parse_double_tok(value, line_no, vcol); };
        auto integer = [&] { return detail::parse_int_tok(value, line_no, vcol); };

        if (section == "geometry") {
            if (key == "d") {
                cfg.d = num();
                if (!(cfg.d > 0.0)) throw ConfigError(line_no, vcol, "d must be positive");
            } else if (key == "a") {
                cfg.a = num();
                if (cfg.a < 0.0) throw ConfigError(line_no, vcol, "a must be nonnegative");
            } else if (key == "margin") {
                cfg.margin = num();
                if (cfg.margin < 0.0) throw ConfigError(line_no, vcol, "margin must be nonnegative");
            } else if (key == "trap") {
                const auto toks = detail::split_ws(value);
                if (toks[0] == "none") {
                    if (toks.size() != 1) throw ConfigError(line_no, vcol, "trap = none takes no arguments");
                    cfg.trap.reset();
                } else if (toks[0] == "rect") {
                    if (toks.size() != 5)
                        throw ConfigError(line_no, vcol, "trap = rect needs CX CY W H");
                    const double cx = detail::parse_double_tok(toks[1], line_no, vcol);
                    const double cy = detail::parse_double_tok(toks[2], line_no, vcol);
                    const double w = detail::parse_double_tok(toks[3], line_no, vcol);
                    const double ht = detail::parse_double_tok(toks[4], line_no, vcol);
                    if (!(w > 0.0) || !(ht > 0.0))
                        throw ConfigError(line_no, vcol, "rect width and height must be positive");
                    cfg.trap = rect_trap(cx, cy, w, ht);
                } else if (toks[0] == "poly") {
                    if (toks.size() < 7 || (toks.size() - 1) % 2 != 0)
                        throw ConfigError(line_no, vcol, "trap = poly needs at least three X Y pairs");
                    Polygon p;
                    for (std::size_t i = 1; i + 1 < toks.size(); i += 2)
                        p.push_back({detail::parse_double_tok(toks[i], line_no, vcol),
                                     detail::parse_double_tok(toks[i + 1], line_no, vcol)});
                    if (signed_area(p) < 0.0) std::reverse(p.begin(), p.end());
                    cfg.trap = std::move(p);
                } else {
                    throw ConfigError(line_no, vcol, "trap must be none, rect, or poly");
                }
            } else if (key == "coupling") {
                const auto toks = detail::split_ws(value);
                if (toks[0] == "linear") {
                    if (toks.size() != 1) throw ConfigError(line_no, vcol, "coupling = linear takes no arguments");
                    cfg.rule = CouplingRule::linear();
                } else if (toks[0] == "power") {
                    if (toks.size() != 3) throw ConfigError(line_no, vcol, "coupling = power needs COEF EXPONENT");
                    cfg.rule = CouplingRule::power(detail::parse_double_tok(toks[1], line_no, vcol),
                                                   detail::parse_double_tok(toks[2], line_no, vcol));
                } else {
                    throw ConfigError(line_no, vcol, "coupling must be linear or power");
                }
            } else {
                throw ConfigError(line_no, col0, "unknown key '" + key + "' in [geometry]");
            }
        } else if (section == "numerics") {
            if (key == "h") {
                cfg.h = num();
                if (!(cfg.h > 0.0)) throw ConfigError(line_no, vcol, "h must be positive");
            } else if (key == "phi_count") {
                cfg.phi_count = static_cast<int>(integer());
                if (cfg.phi_count < 2) throw ConfigError(line_no, vcol, "phi_count must be at least 2");
            } else if (key == "k_max") {
                cfg.k_max = static_cast<int>(integer());
                if (cfg.k_max < 1) throw ConfigError(line_no, vcol, "k_max must be at least 1");
            } else if (key == "tol") {
                cfg.tol = num();
                if (!(cfg.tol > 0.0)) throw ConfigError(line_no, vcol, "tol must be positive");
            } else if (key == "dense_threshold") {
                cfg.dense_threshold = static_cast<int>(integer());
                if (cfg.dense_threshold < 0) throw ConfigError(line_no, vcol, "dense_threshold must be nonnegative");
            } else if (key == "seed") {
                const long long s = integer();
                if (s < 0) throw ConfigError(line_no, vcol, "seed must be nonnegative");
                cfg.seed = static_cast<std::uint64_t>(s);
            } else {
                throw ConfigError(line_no, col0, "unknown key '" + key + "' in [numerics]");
            }
        } else {  // study
            if (key == "epsilons") {
                const auto toks = detail::split_ws(value);
                std::vector<double> eps;
                for (const auto& t : toks) eps.push_back(detail::parse_double_tok(t, line_no, vcol));
                for (std::size_t i = 0; i < eps.size(); ++i) {
                    if (!(eps[i] > 0.0)) throw ConfigError(line_no, vcol, "eps values must be positive");
                    if (i > 0 && !(eps[i] < eps[i - 1]))
                        throw ConfigError(line_no, vcol, "eps list must be strictly decreasing");
                }
                cfg.epsilons = std::move(eps);
            } else if (key == "window") {
                cfg.window = num();
                if (!(cfg.window > 0.0)) throw ConfigError(line_no, vcol, "window must be positive");
            } else if (key == "output_dir") {
                cfg.output_dir = value;
            } else {
                throw ConfigError(line_no, col0, "unknown key '" + key + "' in [study]");
            }
        }
    }
    return cfg;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
    std::istringstream iss(text);
    return parse_config(iss);
}

inline ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    return parse_config(in);
}

} // namespace dpband
