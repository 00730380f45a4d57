#pragma once

// Integrated probabilities of the decaying state: nonescape probability
// I_in, escaped probability I_ex, unitarity deficit, flux conservation,
// survival probability and wavefront kinematics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "resdecay/errors.hpp"
#include "resdecay/quadrature.hpp"
#include "resdecay/wavefunction.hpp"

namespace resdecay {

struct QuadratureConfig {
    std::optional<double> r_max;  // outer cutoff; 4000 a when unset
    double abs_tol = 1e-6;
    double rel_tol = 1e-8;
    double min_points_per_oscillation = 20.0;
    std::size_t max_panels = 2'000'000;

    double outer_cutoff(double a) const { return r_max.value_or(4000.0 * a); }

    void validate(double a) const {
        if (!(outer_cutoff(a) > a)) throw ConfigError("quadrature.r_max must exceed a");
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw ConfigError("quadrature tolerances must be > 0");
        if (!(min_points_per_oscillation >= 8.0))
            throw ConfigError("quadrature.min_points_per_oscillation must be >= 8");
    }

    AdaptiveOptions adaptive() const { return {abs_tol, rel_tol, max_panels}; }
};

struct IntegralEstimate {
    double value = 0.0;
    double error = 0.0;
    std::size_t panels = 0;
};

struct ExternalIntegral {
    double value = 0.0;          // int_a^{r_max} |Psi_ex|^2
    double error = 0.0;
    double tail_estimate = 0.0;  // analytic 1/r^2 tail beyond r_max, not included in value
    std::size_t panels = 0;
    int fronts_beyond_cutoff = 0;
    double weight_beyond_cutoff = 0.0;  // sum |Re C_n Cbar_n| of poles whose front is past r_max
    std::vector<std::string> warnings;
};

struct DensitySnapshot {
    double t = 0.0;
    std::vector<double> grid;
    std::vector<double> density;
    double I_in = 0.0;
    double I_ex = 0.0;
    double deficit = 0.0;  // 1 - I_in - I_ex
    double I_in_error = 0.0;
    double I_ex_error = 0.0;
    double tail_estimate = 0.0;
    std::vector<std::string> warnings;
};

/// Position a + 2 (alpha_n - beta_n) t at which the sign of Re y_n flips.
inline double front_boundary(const ExpansionTerm& term, double a, double t) {
    return a + 2.0 * (term.kappa.real() + term.kappa.imag()) * t;
}

namespace detail {

// Largest alpha_n among poles whose exponential (Gamow-like) part is still
// non-negligible at some point of [lo, hi]: behind its front and within
// ~ln(1e14)/beta_n of it. Floored at alpha_1.
inline double active_wavenumber(const DecaySolution& sol, double t, double lo, double hi) {
    const double a = sol.a();
    double k = sol.terms.front().kappa.real();
    for (const auto& term : sol.terms) {
        const double alpha = term.kappa.real();
        const double beta = -term.kappa.imag();
        const double front = front_boundary(term, a, t);
        if (front < lo) continue;
        // log amplitude of the plane-wave part at r = hi relative to its value at the front
        const double reach = 32.0 / beta;
        if (std::min(hi, front) < front - reach) continue;
        k = std::max(k, alpha);
    }
    return k;
}

inline std::vector<double> external_breakpoints(const DecaySolution& sol, double t, double r_max, double ppo) {
    constexpr double points_per_panel = 15.0;
    const double two_pi = 2.0 * std::numbers::pi;
    std::vector<double> b{sol.a()};
    double x = sol.a();
    // Panel width is re-evaluated over blocks of constant resolution.
    while (x < r_max) {
        const double block_end = std::min(r_max, x + std::max(1.0, 0.01 * (r_max - sol.a())));
        const double k = active_wavenumber(sol, t, x, block_end);
        const double width = points_per_panel * two_pi / (k * ppo);
        const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((block_end - x) / width)));
        for (std::size_t i = 1; i <= n; ++i) b.push_back(x + (block_end - x) * static_cast<double>(i) / n);
        b.back() = block_end;
        x = block_end;
    }
    return b;
}

}  // namespace detail

/// I_in(t) = int_0^a |Psi_in(r,t)|^2 dr, the nonescape probability.
inline IntegralEstimate integrate_internal(const DecaySolution& sol, double t, const QuadratureConfig& cfg = {}) {
    if (!(t >= 0.0)) throw DomainError("integrate_internal: t must be >= 0");
    cfg.validate(sol.a());
    const double a = sol.a();
    const double k = sol.terms.back().kappa.real();
    const auto breaks = uniform_breakpoints(0.0, a, 15.0 * 2.0 * std::numbers::pi / (k * cfg.min_points_per_oscillation));
    QuadratureResult<double> r;
    if (t < t_min) {
        r = integrate_adaptive<double>([&](double x) { return std::norm(sol.initial(x)); }, breaks, cfg.adaptive());
    } else {
        const InteriorSlice slice = interior_slice(sol, t);
        r = integrate_adaptive<double>([&](double x) { return std::norm(psi_internal(sol, slice, x)); }, breaks,
                                       cfg.adaptive());
    }
    return {r.value, r.error, r.panels};
}

/// I_ex(t) = int_a^{r_max} |Psi_ex(r,t)|^2 dr plus a separately reported 1/r^2 tail estimate.
inline ExternalIntegral integrate_external(const DecaySolution& sol, double t, const QuadratureConfig& cfg = {}) {
    if (!(t >= 0.0)) throw DomainError("integrate_external: t must be >= 0");
    cfg.validate(sol.a());
    ExternalIntegral out;
    if (t < t_min) return out;

    const double a = sol.a();
    const double r_max = cfg.outer_cutoff(a);
    const auto breaks = detail::external_breakpoints(sol, t, r_max, cfg.min_points_per_oscillation);
    const auto r = integrate_adaptive<double>([&](double x) { return std::norm(psi_external(sol, x, t)); }, breaks,
                                              cfg.adaptive());
    out.value = r.value;
    out.error = r.error;
    out.panels = r.panels;

    const cplx s0 = asymptotic_tail_constant(sol);
    out.tail_estimate = t * std::norm(s0) / (std::numbers::pi * (r_max - a));

    for (std::size_t k = 0; k < sol.terms.size(); ++k) {
        if (front_boundary(sol.terms[k], a, t) > r_max) {
            ++out.fronts_beyond_cutoff;
            out.weight_beyond_cutoff += std::abs((sol.coeffs.C[k] * sol.coeffs.C_bar[k]).real());
        }
    }
    if (out.weight_beyond_cutoff > 1e-4) {
        out.warnings.push_back("truncated front: poles with fronts beyond r_max carry sum-rule weight " +
                               std::to_string(out.weight_beyond_cutoff));
    }
    return out;
}

/// Both integrals and the unitarity deficit 1 - I_in - I_ex.
inline DensitySnapshot unitarity_check(const DecaySolution& sol, double t, const QuadratureConfig& cfg = {}) {
    DensitySnapshot snap;
    snap.t = t;
    const auto in = integrate_internal(sol, t, cfg);
    const auto ex = integrate_external(sol, t, cfg);
    snap.I_in = in.value;
    snap.I_in_error = in.error;
    snap.I_ex = ex.value;
    snap.I_ex_error = ex.error;
    snap.tail_estimate = ex.tail_estimate;
    snap.deficit = 1.0 - snap.I_in - snap.I_ex;
    snap.warnings = ex.warnings;
    return snap;
}

/// |Psi(r,t)|^2 on an arbitrary grid, splitting at r = a.
inline std::vector<double> density_profile(const DecaySolution& sol, std::span<const double> grid, double t) {
    std::vector<double> out(grid.size());
    const double a = sol.a();
    std::optional<InteriorSlice> slice;
    if (t >= t_min) slice = interior_slice(sol, t);
    parallel_for(grid.size(), [&](std::size_t i) {
        const double r = grid[i];
        if (r <= a)
            out[i] = std::norm(slice ? psi_internal(sol, *slice, r) : psi_internal(sol, r, t));
        else
            out[i] = std::norm(psi_external(sol, r, t));
    });
    return out;
}

struct FluxRow {
    double t = 0.0;
    double total = 0.0;       // I_in + I_ex
    double derivative = 0.0;  // finite-difference d(total)/dt
    double propagated_error = 0.0;
    double tolerance = 0.0;
};

/// Finite-difference time derivative of I_in + I_ex over a time table: central
/// differences inside, one-sided at the ends. The tolerance of each row is
/// ten times the larger of the propagated quadrature error and abs_tol / min dt.
inline std::vector<FluxRow> flux_conservation_scan(const DecaySolution& sol, const std::vector<double>& times,
                                                   const QuadratureConfig& cfg = {}) {
    if (times.size() < 3) throw DomainError("flux_conservation_scan: need at least 3 times");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw DomainError("flux_conservation_scan: times must strictly increase");
    if (!(times.front() >= 0.0)) throw DomainError("flux_conservation_scan: times must be >= 0");

    std::vector<FluxRow> rows(times.size());
    std::vector<double> err(times.size());
    double min_dt = times[1] - times[0];
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto snap = unitarity_check(sol, times[i], cfg);
        rows[i].t = times[i];
        rows[i].total = snap.I_in + snap.I_ex;
        err[i] = snap.I_in_error + snap.I_ex_error;
        if (i > 0) min_dt = std::min(min_dt, times[i] - times[i - 1]);
    }
    const double floor = cfg.abs_tol / min_dt;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = i + 1 == rows.size() ? i : i + 1;
        const double dt = times[hi] - times[lo];
        rows[i].derivative = (rows[hi].total - rows[lo].total) / dt;
        rows[i].propagated_error = (err[hi] + err[lo]) / dt;
        rows[i].tolerance = 10.0 * std::max(rows[i].propagated_error, floor);
    }
    return rows;
}

struct SurvivalPoint {
    cplx amplitude;       // A(t) = int_0^a conj(Psi(r,0)) Psi(r,t) dr
    double probability;   // S(t) = |A(t)|^2
    double error;
};

/// Survival amplitude by quadrature of the overlap with the initial state.
inline SurvivalPoint survival_amplitude(const DecaySolution& sol, double t, const QuadratureConfig& cfg = {}) {
    if (!(t >= 0.0)) throw DomainError("survival_amplitude: t must be >= 0");
    cfg.validate(sol.a());
    const double a = sol.a();
    const double k = sol.terms.back().kappa.real();
    const auto breaks = uniform_breakpoints(0.0, a, 15.0 * 2.0 * std::numbers::pi / (k * cfg.min_points_per_oscillation));
    QuadratureResult<cplx> r;
    if (t < t_min) {
        r = integrate_adaptive<cplx>([&](double x) { return std::norm(sol.initial(x)) + cplx{}; }, breaks,
                                     cfg.adaptive());
    } else {
        const InteriorSlice slice = interior_slice(sol, t);
        r = integrate_adaptive<cplx>(
            [&](double x) { return std::conj(sol.initial(x)) * psi_internal(sol, slice, x); }, breaks, cfg.adaptive());
    }
    return {r.value, std::norm(r.value), r.error};
}

struct Wavefront {
    int n;
    double r;
};

/// Classical front positions r_n = a + 2 alpha_n t launched from the shell.
inline std::vector<Wavefront> wavefront_positions(const DecaySolution& sol, double t) {
    if (!(t > 0.0)) throw DomainError("wavefront_positions: t must be > 0");
    std::vector<Wavefront> out;
    out.reserve(sol.size());
    for (const auto& s : sol.states) out.push_back({s.pole.n, sol.a() + 2.0 * s.pole.alpha() * t});
    return out;
}

/// Indices of strict local maxima of a sampled profile.
inline std::vector<std::size_t> local_maxima(std::span<const double> values) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 1; i + 1 < values.size(); ++i)
        if (values[i] > values[i - 1] && values[i] >= values[i + 1]) idx.push_back(i);
    return idx;
}

struct ForerunnerMatch {
    int n = 0;
    double r_predicted = 0.0;
    std::optional<double> r_peak;
    std::optional<double> relative_offset;  // (r_peak - r_predicted) / r_predicted
};

struct ForerunnerScan {
    std::vector<ForerunnerMatch> rows;
    std::vector<std::string> warnings;
};

/// Pairs each predicted front inside the sampled range with the nearest local
/// maximum of the density. A peak is accepted only if it lies closer to its own
/// front than to the neighbouring fronts.
inline ForerunnerScan match_forerunners(const DecaySolution& sol, double t, std::span<const double> grid,
                                        std::span<const double> density) {
    if (grid.size() != density.size()) throw DomainError("match_forerunners: grid and density sizes differ");
    if (grid.size() < 3) throw DomainError("match_forerunners: need at least 3 grid points");
    const auto fronts = wavefront_positions(sol, t);
    const auto peaks = local_maxima(density);

    ForerunnerScan scan;
    std::vector<Wavefront> inside;
    for (const auto& f : fronts)
        if (f.r >= grid.front() && f.r <= grid.back()) inside.push_back(f);

    double max_step = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) max_step = std::max(max_step, grid[i] - grid[i - 1]);
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < inside.size(); ++k) min_gap = std::min(min_gap, inside[k].r - inside[k - 1].r);
    if (inside.size() > 1 && max_step > min_gap / 20.0) {
        scan.warnings.push_back("grid spacing " + std::to_string(max_step) +
                                " is coarse against the front separation " + std::to_string(min_gap) +
                                "; peak matching is unreliable");
    }

    for (std::size_t k = 0; k < inside.size(); ++k) {
        ForerunnerMatch m{inside[k].n, inside[k].r, std::nullopt, std::nullopt};
        const double lo = k == 0 ? grid.front() : 0.5 * (inside[k - 1].r + inside[k].r);
        const double hi = k + 1 == inside.size() ? grid.back() : 0.5 * (inside[k].r + inside[k + 1].r);
        double best = std::numeric_limits<double>::infinity();
        for (auto i : peaks) {
            const double d = std::abs(grid[i] - m.r_predicted);
            if (grid[i] >= lo && grid[i] <= hi && d < best) {
                best = d;
                m.r_peak = grid[i];
            }
        }
        if (m.r_peak) m.relative_offset = (*m.r_peak - m.r_predicted) / m.r_predicted;
        scan.rows.push_back(m);
    }
    return scan;
}

/// Least-squares slope of ln S against t.
inline double log_slope(std::span<const double> t, std::span<const double> s) {
    if (t.size() != s.size() || t.size() < 2) throw DomainError("log_slope: need at least two matching samples");
    double mt = 0.0, ml = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(s[i] > 0.0)) throw DomainError("log_slope: samples must be positive");
        mt += t[i];
        ml += std::log(s[i]);
    }
    mt /= t.size();
    ml /= t.size();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        num += (t[i] - mt) * (std::log(s[i]) - ml);
        den += (t[i] - mt) * (t[i] - mt);
    }
    return num / den;
}

}  // namespace resdecay
