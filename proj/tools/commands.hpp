#pragma once

// Subcommand implementations for the resdecay command-line tool.
//
// Exit codes: 0 success, 1 numerical failure (solver, quadrature, domain),
// 2 configuration or usage error, 3 a validation bound was exceeded.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "resdecay/config.hpp"
#include "resdecay/format.hpp"
#include "resdecay/observables.hpp"

namespace resdecay::cli {

enum Exit : int { ok = 0, numerical_failure = 1, usage_error = 2, bound_exceeded = 3 };

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

inline nlohmann::json cell_json(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return std::isfinite(*d) ? nlohmann::json(*d) : nlohmann::json();
    if (const auto* i = std::get_if<long long>(&c)) return *i;
    const auto& s = std::get<std::string>(c);
    return s.empty() ? nlohmann::json() : nlohmann::json(s);
}

inline nlohmann::json table_json(const Table& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : t.rows) {
        nlohmann::json r = nlohmann::json::array();
        for (const auto& c : row) r.push_back(cell_json(c));
        rows.push_back(std::move(r));
    }
    return {{"columns", t.columns}, {"rows", rows}};
}

inline void write_table_stream(std::ostream& os, const Table& t, OutputFormat f) {
    if (f == OutputFormat::Csv)
        write_csv(os, t);
    else
        os << table_json(t).dump(2) << '\n';
}

inline std::string extension(OutputFormat f) { return f == OutputFormat::Csv ? ".csv" : ".json"; }

inline void write_text_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
    f << text;
}

/// Tables go to stdout when output.path is "-", otherwise to <path>/<stem>.<ext>.
inline void emit_table(const RunConfig& cfg, const std::string& stem, const Table& t, Streams io) {
    if (cfg.output_path == "-") {
        write_table_stream(io.out, t, cfg.format);
        return;
    }
    std::filesystem::create_directories(cfg.output_path);
    std::ostringstream os;
    write_table_stream(os, t, cfg.format);
    write_text_file(std::filesystem::path(cfg.output_path) / (stem + extension(cfg.format)), os.str());
}

inline std::filesystem::path output_dir(const RunConfig& cfg) {
    const std::filesystem::path dir = cfg.output_path == "-" ? "." : cfg.output_path;
    std::filesystem::create_directories(dir);
    return dir;
}

inline DecaySolution build_solution(const RunConfig& cfg) {
    DecayOptions opt;
    opt.solver = cfg.solver();
    return make_decay_solution(cfg.potential, cfg.initial_state(), cfg.n_poles, opt);
}

inline std::vector<double> uniform_grid(double lo, double hi, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
    g.back() = hi;
    return g;
}

inline double to_natural(const RunConfig& cfg, double t, double tau) {
    return cfg.time_unit == TimeUnit::Lifetime ? t * tau : t;
}

inline void warn(Streams io, const std::string& what) { io.err << "warning: " << what << '\n'; }

inline int cmd_poles(const RunConfig& cfg, Streams io) {
    if (auto w = cfg.potential.seed_regime_warning()) warn(io, *w);
    const auto poles = solve_poles(cfg.potential, cfg.n_poles, cfg.solver());
    Table t{{"n", "alpha", "beta", "E_n", "Gamma_n", "residual"}, {}};
    for (const auto& p : poles)
        t.add({(long long)p.n, p.alpha(), p.beta(), p.resonance_energy(), p.width(), p.residual});
    emit_table(cfg, "poles", t, io);
    return ok;
}

inline int cmd_states(const RunConfig& cfg, Streams io) {
    const auto sol = build_solution(cfg);
    Table t{{"n", "Re_A", "Im_A", "Re_B", "Im_B", "Re_C", "Im_C", "norm_residual"}, {}};
    for (std::size_t k = 0; k < sol.size(); ++k) {
        const auto& s = sol.states[k];
        const cplx c = sol.coeffs.C[k];
        t.add({(long long)s.pole.n, s.A.real(), s.A.imag(), s.B.real(), s.B.imag(), c.real(), c.imag(),
               s.norm_residual});
    }
    emit_table(cfg, "states", t, io);
    return ok;
}

inline int cmd_snapshot(const RunConfig& cfg, double t_in, bool gamow, Streams io) {
    if (!(t_in >= 0.0)) throw ConfigError("snapshot: --t must be >= 0");
    const auto sol = build_solution(cfg);
    const double a = sol.a();
    const double t = to_natural(cfg, t_in, sol.lifetime());

    const auto in_grid = uniform_grid(cfg.grid_r_min, a, cfg.grid_n_points);
    const auto ex_grid = uniform_grid(a, cfg.grid_outer(a), cfg.grid_n_points);

    auto profile = [&](const std::vector<double>& grid, bool interior) {
        std::vector<cplx> psi = interior ? psi_internal_grid(sol, grid, t) : psi_external_grid(sol, grid, t);
        std::vector<std::string> cols{"r", "density", "re_psi", "im_psi"};
        if (gamow) cols.push_back("gamow_density");
        Table tab{cols, {}};
        const auto& s1 = sol.states.front();
        const cplx c1 = sol.coeffs.C.front();
        const cplx i{0.0, 1.0};
        for (std::size_t j = 0; j < grid.size(); ++j) {
            std::vector<Cell> row{grid[j], std::norm(psi[j]), psi[j].real(), psi[j].imag()};
            if (gamow) {
                const cplx g = interior ? c1 * s1(grid[j]) * std::exp(-i * s1.kappa() * s1.kappa() * t)
                                        : c1 * psi_gamow(s1, grid[j], t);
                row.push_back(std::norm(g));
            }
            tab.add(std::move(row));
        }
        return tab;
    };
    const auto dir = output_dir(cfg);
    const Table internal = profile(in_grid, true);
    const Table external = profile(ex_grid, false);
    std::ostringstream os_in, os_ex;
    write_table_stream(os_in, internal, cfg.format);
    write_table_stream(os_ex, external, cfg.format);
    write_text_file(dir / ("snapshot_internal" + extension(cfg.format)), os_in.str());
    write_text_file(dir / ("snapshot_external" + extension(cfg.format)), os_ex.str());

    const auto snap = unitarity_check(sol, t, cfg.quadrature);
    nlohmann::json meta;
    meta["t"] = t;
    meta["t_over_tau"] = t / sol.lifetime();
    meta["I_in"] = snap.I_in;
    meta["I_ex"] = snap.I_ex;
    meta["deficit"] = snap.deficit;
    meta["I_in_error"] = snap.I_in_error;
    meta["I_ex_error"] = snap.I_ex_error;
    meta["tail_estimate"] = snap.tail_estimate;
    nlohmann::json fronts = nlohmann::json::array();
    if (t > 0.0)
        for (const auto& f : wavefront_positions(sol, t)) fronts.push_back({{"n", f.n}, {"r", f.r}});
    meta["wavefront_positions"] = fronts;
    meta["warnings"] = snap.warnings;
    write_text_file(dir / "snapshot.json", meta.dump(2) + "\n");
    for (const auto& w : snap.warnings) warn(io, w);
    return ok;
}

inline int cmd_unitarity(const RunConfig& cfg, Streams io) {
    const auto sol = build_solution(cfg);
    const double tau = sol.lifetime();
    Table tab{{"t", "t_over_tau", "I_in", "I_ex", "total", "deficit", "tail_estimate"}, {}};
    int status = ok;
    for (double t : cfg.natural_times(tau)) {
        try {
            const auto s = unitarity_check(sol, t, cfg.quadrature);
            tab.add({t, t / tau, s.I_in, s.I_ex, s.I_in + s.I_ex, s.deficit, s.tail_estimate});
            for (const auto& w : s.warnings) warn(io, "t = " + format_real(t) + ": " + w);
            if (std::abs(s.deficit) > cfg.deficit_bound) {
                io.err << "error: t = " << format_real(t) << ": |deficit| " << format_real(std::abs(s.deficit))
                       << " exceeds bound " << format_real(cfg.deficit_bound) << '\n';
                if (status == ok) status = bound_exceeded;
            }
        } catch (const ConvergenceError& e) {
            io.err << "error: t = " << format_real(t) << ": " << e.what() << '\n';
            tab.add({t, t / tau, std::string(), std::string(), std::string(), std::string(), std::string()});
            status = numerical_failure;
        }
    }
    emit_table(cfg, "unitarity", tab, io);
    return status;
}

inline int cmd_forerunners(const RunConfig& cfg, double t_in, Streams io) {
    if (!(t_in > 0.0)) throw ConfigError("forerunners: --t must be > 0");
    const auto sol = build_solution(cfg);
    const double a = sol.a();
    const double t = to_natural(cfg, t_in, sol.lifetime());
    const auto grid = uniform_grid(std::max(a, cfg.grid_r_min), cfg.grid_outer(a), cfg.grid_n_points);
    const auto density = density_profile(sol, grid, t);
    const auto scan = match_forerunners(sol, t, grid, density);
    for (const auto& w : scan.warnings) warn(io, w);
    Table tab{{"n", "r_predicted", "r_peak", "relative_offset"}, {}};
    for (const auto& m : scan.rows) {
        tab.add({(long long)m.n, m.r_predicted, m.r_peak ? Cell(*m.r_peak) : Cell(std::string()),
                 m.relative_offset ? Cell(*m.relative_offset) : Cell(std::string())});
    }
    emit_table(cfg, "forerunners", tab, io);
    return ok;
}

inline int cmd_survival(const RunConfig& cfg, Streams io) {
    const auto sol = build_solution(cfg);
    const double tau = sol.lifetime();
    Table tab{{"t", "t_over_tau", "S", "P_nonescape"}, {}};
    for (double t : cfg.natural_times(tau)) {
        const auto s = survival_amplitude(sol, t, cfg.quadrature);
        const auto p = integrate_internal(sol, t, cfg.quadrature);
        tab.add({t, t / tau, s.probability, p.value});
    }
    emit_table(cfg, "survival", tab, io);
    return ok;
}

inline int cmd_special_eval(const RunConfig& cfg, const std::vector<double>& z, const std::vector<double>& m,
                            Streams io) {
    if (!z.empty() == !m.empty()) throw ConfigError("special eval: give exactly one of --z or --M");
    if (!z.empty()) {
        const cplx w = faddeyeva({z[0], z[1]});
        Table tab{{"re_z", "im_z", "re_w", "im_w"}, {}};
        tab.add({z[0], z[1], w.real(), w.imag()});
        emit_table(cfg, "special", tab, io);
    } else {
        // x = r - a, so evaluate with a = 1, r = x + 1.
        const auto arg = transient_argument(m[0] + 1.0, 1.0, m[1], {m[2], m[3]});
        const cplx v = transient_M(arg);
        Table tab{{"x", "t", "re_kappa", "im_kappa", "re_M", "im_M"}, {}};
        tab.add({m[0], m[1], m[2], m[3], v.real(), v.imag()});
        emit_table(cfg, "special", tab, io);
    }
    return ok;
}

/// Parses argv and dispatches; never throws.
inline int run(int argc, const char* const* argv, Streams io) {
    CLI::App app{"Resonant-state expansion of tunneling decay from a delta-shell potential", "resdecay"};
    std::string config_path, out_dir, format;
    app.add_option("--config", config_path, "flat key = value configuration file");
    app.add_option("--out-dir", out_dir, "output directory (sets output.path)");
    app.add_option("--format", format, "csv or json (sets output.format)");
    app.require_subcommand(1);

    std::vector<std::string> overrides;
    auto add_set = [&](CLI::App* sub) {
        sub->add_option("--set", overrides, "override a configuration key, key=value")->take_all();
    };

    auto* poles = app.add_subcommand("poles", "resonance poles");
    auto* states = app.add_subcommand("states", "normalization and expansion coefficients");
    auto* snapshot = app.add_subcommand("snapshot", "density profiles and integrals at one time");
    auto* unitarity = app.add_subcommand("unitarity", "I_in + I_ex over the time table");
    auto* forerunners = app.add_subcommand("forerunners", "forerunner peaks against predicted fronts");
    auto* survival = app.add_subcommand("survival", "survival probability over the time table");
    auto* special = app.add_subcommand("special", "special functions");
    auto* eval = special->add_subcommand("eval", "evaluate w(z) or M");
    special->require_subcommand(1);
    for (auto* s : {poles, states, snapshot, unitarity, forerunners, survival, eval}) add_set(s);

    double snap_t = 0.0, fore_t = 0.0;
    bool gamow = false;
    snapshot->add_option("--t", snap_t, "time (in times.unit)")->required();
    snapshot->add_flag("--gamow", gamow, "add the single-pole Gamow density column");
    forerunners->add_option("--t", fore_t, "time (in times.unit)")->required();
    std::vector<double> z, m;
    eval->add_option("--z", z, "re,im")->expected(2)->delimiter(',');
    eval->add_option("--M", m, "x,t,re_kappa,im_kappa")->expected(4)->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        io.out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        io.out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        io.err << "error: " << e.what() << '\n';
        return usage_error;
    }

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        if (!out_dir.empty()) apply_setting(cfg, "output.path", out_dir);
        if (!format.empty()) apply_setting(cfg, "output.format", format);
        for (const auto& o : overrides) apply_override(cfg, o);
        cfg.validate();

        if (*poles) return cmd_poles(cfg, io);
        if (*states) return cmd_states(cfg, io);
        if (*snapshot) return cmd_snapshot(cfg, snap_t, gamow, io);
        if (*unitarity) return cmd_unitarity(cfg, io);
        if (*forerunners) return cmd_forerunners(cfg, fore_t, io);
        if (*survival) return cmd_survival(cfg, io);
        if (*eval) return cmd_special_eval(cfg, z, m, io);
        return usage_error;
    } catch (const ConfigError& e) {
        io.err << "config error: " << e.what() << '\n';
        return usage_error;
    } catch (const SolverError& e) {
        io.err << "solver error (n = " << e.index() << "): " << e.what() << '\n';
        return numerical_failure;
    } catch (const std::exception& e) {
        io.err << "error: " << e.what() << '\n';
        return numerical_failure;
    }
}

}  // namespace resdecay::cli
