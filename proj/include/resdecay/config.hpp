#pragma once

// Run configuration: a flat "key = value" text file, one entry per line,
// '#' starts a comment. Later assignments (including command-line
// overrides) replace earlier ones.

#include <cerrno>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "resdecay/errors.hpp"
#include "resdecay/observables.hpp"

namespace resdecay {

enum class TimeUnit { Lifetime, Natural };
enum class OutputFormat { Csv, Json };

struct RunConfig {
    PotentialSpec potential;
    int q = 1;
    int n_poles = 100;
    double solver_tol = 1e-12;
    QuadratureConfig quadrature;
    std::vector<double> times{0.2, 0.5, 1.0, 2.0};
    TimeUnit time_unit = TimeUnit::Lifetime;
    double grid_r_min = 0.0;
    std::optional<double> grid_r_max;  // 4000 a when unset
    int grid_n_points = 4001;
    OutputFormat format = OutputFormat::Csv;
    std::string output_path = "-";  // "-" writes tables to stdout
    double deficit_bound = 1e-3;

    static const std::vector<std::string>& keys() {
        static const std::vector<std::string> k = {
            "potential.lambda", "potential.a",        "initial_state.q",
            "expansion.n_poles", "solver.tol",        "quadrature.r_max",
            "quadrature.abs_tol", "quadrature.rel_tol", "quadrature.min_points_per_oscillation",
            "times",             "times.unit",        "grid.r_min",
            "grid.r_max",        "grid.n_points",     "output.format",
            "output.path",       "unitarity.deficit_bound"};
        return k;
    }

    double grid_outer(double a) const { return grid_r_max.value_or(4000.0 * a); }

    SolverOptions solver() const { return {solver_tol, SolverOptions{}.max_iterations}; }
    InitialState initial_state() const { return {q, potential.a}; }

    /// Times in natural units given the lifetime tau.
    std::vector<double> natural_times(double tau) const {
        std::vector<double> out = times;
        if (time_unit == TimeUnit::Lifetime)
            for (auto& t : out) t *= tau;
        return out;
    }

    void validate() const {
        potential.validate();
        if (q < 1) throw ConfigError("initial_state.q must be a positive integer");
        if (n_poles < 1) throw ConfigError("expansion.n_poles must be a positive integer");
        if (!(solver_tol > 0.0)) throw ConfigError("solver.tol must be > 0");
        quadrature.validate(potential.a);
        if (times.empty()) throw ConfigError("times must not be empty");
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (!(times[i] >= 0.0) || !std::isfinite(times[i])) throw ConfigError("times must be finite and >= 0");
            if (i > 0 && !(times[i] > times[i - 1])) throw ConfigError("times must be strictly increasing");
        }
        if (!(grid_r_min >= 0.0)) throw ConfigError("grid.r_min must be >= 0");
        if (!(grid_outer(potential.a) > potential.a)) throw ConfigError("grid.r_max must exceed potential.a");
        if (!(grid_r_min < potential.a)) throw ConfigError("grid.r_min must be below potential.a");
        if (grid_n_points < 2) throw ConfigError("grid.n_points must be >= 2");
        if (!(deficit_bound > 0.0)) throw ConfigError("unitarity.deficit_bound must be > 0");
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, std::string_view v) {
    v = trim(v);
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || v.empty())
        throw ConfigError(key + ": expected a real number, got '" + std::string(v) + "'");
    return out;
}

inline int parse_int(const std::string& key, std::string_view v) {
    v = trim(v);
    int out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || v.empty())
        throw ConfigError(key + ": expected an integer, got '" + std::string(v) + "'");
    return out;
}

}  // namespace detail

/// Applies one assignment. Unknown keys are an error.
inline void apply_setting(RunConfig& cfg, const std::string& key, std::string_view value) {
    using detail::parse_int;
    using detail::parse_real;
    value = detail::trim(value);
    if (key == "potential.lambda") cfg.potential.lambda = parse_real(key, value);
    else if (key == "potential.a") cfg.potential.a = parse_real(key, value);
    else if (key == "initial_state.q") cfg.q = parse_int(key, value);
    else if (key == "expansion.n_poles") cfg.n_poles = parse_int(key, value);
    else if (key == "solver.tol") cfg.solver_tol = parse_real(key, value);
    else if (key == "quadrature.r_max") cfg.quadrature.r_max = parse_real(key, value);
    else if (key == "quadrature.abs_tol") cfg.quadrature.abs_tol = parse_real(key, value);
    else if (key == "quadrature.rel_tol") cfg.quadrature.rel_tol = parse_real(key, value);
    else if (key == "quadrature.min_points_per_oscillation")
        cfg.quadrature.min_points_per_oscillation = parse_real(key, value);
    else if (key == "times") {
        cfg.times.clear();
        std::string_view rest = value;
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            cfg.times.push_back(parse_real(key, rest.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
            if (detail::trim(rest).empty()) throw ConfigError("times: trailing comma");
        }
    } else if (key == "times.unit") {
        if (value == "lifetime") cfg.time_unit = TimeUnit::Lifetime;
        else if (value == "natural") cfg.time_unit = TimeUnit::Natural;
        else throw ConfigError("times.unit must be 'lifetime' or 'natural'");
    } else if (key == "grid.r_min") cfg.grid_r_min = parse_real(key, value);
    else if (key == "grid.r_max") cfg.grid_r_max = parse_real(key, value);
    else if (key == "grid.n_points") cfg.grid_n_points = parse_int(key, value);
    else if (key == "output.format") {
        if (value == "csv") cfg.format = OutputFormat::Csv;
        else if (value == "json") cfg.format = OutputFormat::Json;
        else throw ConfigError("output.format must be 'csv' or 'json'");
    } else if (key == "output.path") {
        if (value.empty()) throw ConfigError("output.path must not be empty");
        cfg.output_path = std::string(value);
    } else if (key == "unitarity.deficit_bound") cfg.deficit_bound = parse_real(key, value);
    else throw ConfigError("unknown configuration key '" + key + "'");
}

/// "key=value" as given on the command line.
inline void apply_override(RunConfig& cfg, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' lacks '='");
    apply_setting(cfg, std::string(detail::trim(assignment.substr(0, eq))), assignment.substr(eq + 1));
}

inline void parse_config_text(RunConfig& cfg, std::istream& in, const std::string& origin = "<config>") {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view v = line;
        if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
        v = detail::trim(v);
        if (v.empty()) continue;
        const auto eq = v.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        try {
            apply_setting(cfg, std::string(detail::trim(v.substr(0, eq))), v.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    RunConfig cfg;
    parse_config_text(cfg, in, path);
    return cfg;
}

}  // namespace resdecay
