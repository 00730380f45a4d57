#pragma once

// Time-dependent decaying wave function assembled from the full set of
// resonant states. Third-quadrant partners kappa_{-n} = -conj(kappa_n),
// u_{-n} = conj(u_n) are folded in, so each retained pole contributes two
// terms:
//
//   Psi_in(r,t) = sum_n [ C_n u_n(r) M(y0_n) + conj(Cbar_n) conj(u_n(r)) M(y0_{-n}) ]     r <= a
//   Psi_ex(r,t) = sum_n [ C_n u_n(a) M(y_n)  + conj(Cbar_n) conj(u_n(a)) M(y_{-n}) ]      r >= a

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "resdecay/errors.hpp"
#include "resdecay/parallel.hpp"
#include "resdecay/pole_solver.hpp"
#include "resdecay/resonant_states.hpp"
#include "resdecay/special_functions.hpp"

namespace resdecay {

/// Below this time the series is bypassed: Psi_in is the initial state and Psi_ex vanishes.
inline constexpr double t_min = 1e-12;

struct DecayOptions {
    SolverOptions solver;
    double sum_rule_bound = 5e-3;  // max |1 - Re sum C Cbar| accepted at construction
};

/// Per-pole data reused by every evaluation.
struct ExpansionTerm {
    cplx kappa;         // kappa_n
    cplx mirror;        // kappa_{-n} = -conj(kappa_n)
    cplx c_A;           // C_n A_n
    cplx cbar_A_conj;   // conj(Cbar_n A_n)
    cplx c_ua;          // C_n u_n(a)
    cplx cbar_ua_conj;  // conj(Cbar_n u_n(a))
};

struct DecaySolution {
    PotentialSpec spec;
    InitialState initial;
    std::vector<ResonantState> states;
    ExpansionCoefficients coeffs;
    std::vector<ExpansionTerm> terms;
    double sum_rule_deficit = 0.0;

    std::size_t size() const { return states.size(); }
    double a() const { return spec.a; }
    const Pole& pole(std::size_t k) const { return states[k].pole; }
    /// 1 / Gamma_1.
    double lifetime() const { return 1.0 / states.front().pole.width(); }
};

/// Assembles a solution from already-built states and coefficients.
inline DecaySolution make_decay_solution(const PotentialSpec& spec, const InitialState& init,
                                         std::vector<ResonantState> states, ExpansionCoefficients coeffs,
                                         double sum_rule_bound = 5e-3) {
    spec.validate();
    init.validate();
    if (states.empty()) throw DomainError("make_decay_solution: no resonant states");
    if (coeffs.n_terms() != states.size())
        throw DomainError("make_decay_solution: coefficient count does not match state count");
    if (std::abs(init.a - spec.a) > 1e-12 * spec.a)
        throw DomainError("make_decay_solution: initial state width differs from the shell radius");

    DecaySolution sol;
    sol.spec = spec;
    sol.initial = init;
    sol.states = std::move(states);
    sol.coeffs = std::move(coeffs);
    sol.terms.reserve(sol.states.size());
    for (std::size_t k = 0; k < sol.states.size(); ++k) {
        const auto& s = sol.states[k];
        const cplx c = sol.coeffs.C[k];
        const cplx cb = sol.coeffs.C_bar[k];
        const cplx ua = s.boundary_value();
        sol.terms.push_back({s.kappa(), mirror_pole(s.kappa()), c * s.A, std::conj(cb * s.A), c * ua,
                             std::conj(cb * ua)});
    }
    sol.sum_rule_deficit = 1.0 - sum_rule_check(sol.coeffs);
    if (!(std::abs(sol.sum_rule_deficit) <= sum_rule_bound)) {
        throw ConvergenceError("make_decay_solution: sum-rule deficit " + std::to_string(sol.sum_rule_deficit) +
                                   " exceeds bound; retain more poles",
                               sol.sum_rule_deficit, sum_rule_bound);
    }
    return sol;
}

/// Solves n_poles poles, normalizes their states and projects the initial state.
inline DecaySolution make_decay_solution(const PotentialSpec& spec, const InitialState& init, int n_poles,
                                         const DecayOptions& opt = {}) {
    const auto poles = solve_poles(spec, n_poles, opt.solver);
    std::vector<ResonantState> states;
    states.reserve(poles.size());
    for (const auto& p : poles) states.push_back(normalize_state(p, spec));
    auto coeffs = expansion_coefficients(init, states);
    return make_decay_solution(spec, init, std::move(states), std::move(coeffs), opt.sum_rule_bound);
}

/// Interior transient factors M(y0_n), M(y0_{-n}) at one time; shared by all r <= a.
struct InteriorSlice {
    double t = 0.0;
    std::vector<cplx> m_pole;
    std::vector<cplx> m_mirror;
};

inline InteriorSlice interior_slice(const DecaySolution& sol, double t) {
    if (!(t > 0.0)) throw DomainError("interior_slice: t must be > 0");
    InteriorSlice slice;
    slice.t = t;
    slice.m_pole.reserve(sol.terms.size());
    slice.m_mirror.reserve(sol.terms.size());
    const double a = sol.a();
    for (const auto& term : sol.terms) {
        slice.m_pole.push_back(transient_M(transient_argument(a, a, t, term.kappa)));
        slice.m_mirror.push_back(transient_M(transient_argument(a, a, t, term.mirror)));
    }
    return slice;
}

inline cplx psi_internal(const DecaySolution& sol, const InteriorSlice& slice, double r) {
    if (!(r >= 0.0 && r <= sol.a())) throw DomainError("psi_internal: r must lie in [0, a]");
    cplx sum = 0.0;
    for (std::size_t k = 0; k < sol.terms.size(); ++k) {
        const auto& term = sol.terms[k];
        const cplx s = std::sin(term.kappa * r);
        sum += term.c_A * s * slice.m_pole[k] + term.cbar_A_conj * std::conj(s) * slice.m_mirror[k];
    }
    return sum;
}

/// Series value of Psi_in at t > 0 with no small-t bypass.
inline cplx psi_internal_series(const DecaySolution& sol, double r, double t) {
    return psi_internal(sol, interior_slice(sol, t), r);
}

inline cplx psi_internal(const DecaySolution& sol, double r, double t) {
    if (!(r >= 0.0 && r <= sol.a())) throw DomainError("psi_internal: r must lie in [0, a]");
    if (!(t >= 0.0)) throw DomainError("psi_internal: t must be >= 0");
    if (t < t_min) return sol.initial(r);
    return psi_internal_series(sol, r, t);
}

inline cplx psi_external(const DecaySolution& sol, double r, double t) {
    const double a = sol.a();
    if (!(r >= a)) throw DomainError("psi_external: r must be >= a");
    if (!(t >= 0.0)) throw DomainError("psi_external: t must be >= 0");
    if (t < t_min) return 0.0;
    cplx sum = 0.0;
    for (const auto& term : sol.terms) {
        sum += term.c_ua * transient_M(transient_argument(r, a, t, term.kappa)) +
               term.cbar_ua_conj * transient_M(transient_argument(r, a, t, term.mirror));
    }
    return sum;
}

/// Psi_in over a grid; agrees bit-for-bit with the per-point path.
inline std::vector<cplx> psi_internal_grid(const DecaySolution& sol, std::span<const double> r, double t) {
    std::vector<cplx> out(r.size());
    if (t < t_min) {
        if (!(t >= 0.0)) throw DomainError("psi_internal: t must be >= 0");
        for (std::size_t i = 0; i < r.size(); ++i) out[i] = psi_internal(sol, r[i], t);
        return out;
    }
    const InteriorSlice slice = interior_slice(sol, t);
    parallel_for(r.size(), [&](std::size_t i) { out[i] = psi_internal(sol, slice, r[i]); });
    return out;
}

inline std::vector<cplx> psi_external_grid(const DecaySolution& sol, std::span<const double> r, double t) {
    std::vector<cplx> out(r.size());
    parallel_for(r.size(), [&](std::size_t i) { out[i] = psi_external(sol, r[i], t); });
    return out;
}

struct InternalDecomposition {
    cplx exponential;  // sum C_n u_n(r) exp(-i E_n t) exp(-Gamma_n t / 2)
    cplx R;            // nonexponential remainder
};

/// Exponential / nonexponential split of Psi_in. Requires every pole to be proper
/// (alpha_n > beta_n), which places y0_n in pi/2 < arg < 3pi/2.
inline InternalDecomposition psi_internal_decomposed(const DecaySolution& sol, double r, double t) {
    if (!(r >= 0.0 && r <= sol.a())) throw DomainError("psi_internal_decomposed: r must lie in [0, a]");
    if (!(t > 0.0)) throw DomainError("psi_internal_decomposed: t must be > 0");
    for (const auto& s : sol.states)
        if (!s.pole.proper())
            throw DomainError("psi_internal_decomposed: improper pole n = " + std::to_string(s.pole.n) +
                              ", decomposition unavailable");
    const double a = sol.a();
    const cplx i{0.0, 1.0};
    InternalDecomposition d{0.0, 0.0};
    for (const auto& term : sol.terms) {
        const cplx s = std::sin(term.kappa * r);
        const cplx cu = term.c_A * s;
        const cplx cu_mirror = term.cbar_A_conj * std::conj(s);
        auto y0 = transient_argument(a, a, t, term.kappa);
        y0.y = -y0.y;
        d.exponential += cu * std::exp(-i * term.kappa * term.kappa * t);
        d.R -= cu * transient_M(y0) - cu_mirror * transient_M(transient_argument(a, a, t, term.mirror));
    }
    return d;
}

enum class FrontRegime { Behind, Ahead };

struct ExternalDecomposition {
    cplx exponential;  // explicit Gamow-like terms of poles whose front has passed r
    cplx J;            // nonexponential remainder
    std::vector<FrontRegime> regimes;
};

/// Exponential / nonexponential split of Psi_ex at fixed t. Pole n is behind its
/// front when (r - a) <= 2 (alpha_n - beta_n) t (the equality case is assigned here).
inline ExternalDecomposition psi_external_decomposed(const DecaySolution& sol, double r, double t) {
    const double a = sol.a();
    if (!(r >= a)) throw DomainError("psi_external_decomposed: r must be >= a");
    if (!(t > 0.0)) throw DomainError("psi_external_decomposed: t must be > 0, use psi_external at t = 0");
    ExternalDecomposition d{0.0, 0.0, {}};
    d.regimes.reserve(sol.terms.size());
    for (const auto& term : sol.terms) {
        const double alpha = term.kappa.real();
        const double beta = -term.kappa.imag();
        auto arg = transient_argument(r, a, t, term.kappa);
        const cplx mirror_part = term.cbar_ua_conj * transient_M(transient_argument(r, a, t, term.mirror));
        if (r - a <= 2.0 * (alpha - beta) * t) {
            d.regimes.push_back(FrontRegime::Behind);
            d.exponential += term.c_ua * transient_plane_wave(arg);
            arg.y = -arg.y;
            d.J -= term.c_ua * transient_M(arg) - mirror_part;
        } else {
            d.regimes.push_back(FrontRegime::Ahead);
            d.J += term.c_ua * transient_M(arg) + mirror_part;
        }
    }
    return d;
}

/// Single Gamow term u_n(a) exp(i kappa_n (r - a)) exp(-i E_n t - Gamma_n t / 2),
/// amplitude-matched to the resonant state at the shell.
inline cplx psi_gamow(const ResonantState& s, double r, double t) {
    if (!(r >= s.a)) throw DomainError("psi_gamow: r must be >= a");
    if (!(t >= 0.0)) throw DomainError("psi_gamow: t must be >= 0");
    const cplx i{0.0, 1.0};
    const cplx k = s.kappa();
    return s.boundary_value() * std::exp(i * k * (r - s.a) - i * k * k * t);
}

/// sum over the full pole set of C_n u_n(a), mirrors folded in by conjugation symmetry.
inline cplx asymptotic_tail_constant(const DecaySolution& sol) {
    cplx sum = 0.0;
    for (const auto& term : sol.terms) sum += term.c_ua + term.cbar_ua_conj;
    return sum;
}

/// max_n |2 kappa_n t|, the scale r must exceed for the large-r form.
inline double asymptotic_scale(const DecaySolution& sol, double t) {
    double m = 0.0;
    for (const auto& term : sol.terms) m = std::max(m, std::abs(2.0 * term.kappa * t));
    return m;
}

/// Leading large-r behaviour
///   Psi_ex ~ pi^{-1/2} exp(i pi/4) exp(i (r-a)^2 / 4t) t^{1/2} [sum C_n u_n(a)] / (r - a),
/// valid for r > guard_factor * max_n |2 kappa_n t|.
inline cplx psi_asymptotic(const DecaySolution& sol, double r, double t, double guard_factor = 5.0) {
    if (!(t > 0.0)) throw DomainError("psi_asymptotic: t must be > 0");
    if (!(r > guard_factor * asymptotic_scale(sol, t)))
        throw DomainError("psi_asymptotic: r too small for the large-r form, use psi_external");
    const double x = r - sol.a();
    const cplx phase = std::polar(1.0, std::numbers::pi / 4.0 + x * x / (4.0 * t));
    return std::numbers::inv_sqrtpi * phase * std::sqrt(t) * asymptotic_tail_constant(sol) / x;
}

}  // namespace resdecay
