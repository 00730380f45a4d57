#pragma once

// Normalized resonant states u_n(r) of the delta-shell potential and the
// expansion coefficients of a box initial state.
//
//   u_n(r) = A sin(kappa r),      r <= a
//          = B exp(i kappa r),    r >= a
//
// normalized by  int_0^a u_n^2 dr + i u_n(a)^2 / (2 kappa) = 1.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "resdecay/errors.hpp"
#include "resdecay/pole_solver.hpp"

namespace resdecay {

struct ResonantState {
    Pole pole;
    cplx A;  // interior amplitude
    cplx B;  // exterior amplitude
    double a = 1.0;
    double norm_residual = 0.0;

    const cplx& kappa() const { return pole.kappa; }

    /// u_n(r); the two branches coincide at r = a.
    cplx operator()(double r) const {
        if (!(r >= 0.0)) throw DomainError("eval_state: r must be >= 0");
        const cplx i{0.0, 1.0};
        if (r <= a) return A * std::sin(pole.kappa * r);
        return B * std::exp(i * pole.kappa * r);
    }

    /// u_n(a) from the interior branch.
    cplx boundary_value() const { return A * std::sin(pole.kappa * a); }
};

namespace detail {

// int_0^a sin^2(kappa r) dr + i sin^2(kappa a) / (2 kappa), i.e. the normalization
// integral per unit A^2.
template <class T>
std::complex<T> normalization_bracket(std::complex<T> kappa, T a) {
    const std::complex<T> i{0, 1};
    const std::complex<T> s = std::sin(kappa * a);
    return a / T(2) - std::sin(T(2) * kappa * a) / (T(4) * kappa) + i * s * s / (T(2) * kappa);
}

}  // namespace detail

/// Closed-form A and B for a converged pole. The square-root branch is fixed by
/// Re A > 0 (Im A > 0 on the imaginary axis); observables do not depend on it.
inline ResonantState normalize_state(const Pole& p, const PotentialSpec& spec) {
    const long double a = spec.a;
    const cplx_ext bracket = detail::normalization_bracket(p.kappa_ext, a);
    if (std::abs(bracket) < 1e-14L)
        throw DegenerateStateError("normalize_state: normalization integral vanishes for n = " +
                                   std::to_string(p.n));
    cplx_ext A = 1.0L / std::sqrt(bracket);
    if (A.real() < 0.0L || (A.real() == 0.0L && A.imag() < 0.0L)) A = -A;
    const cplx_ext i{0, 1};
    const cplx_ext B = A * std::sin(p.kappa_ext * a) * std::exp(-i * p.kappa_ext * a);

    ResonantState s;
    s.pole = p;
    s.A = {static_cast<double>(A.real()), static_cast<double>(A.imag())};
    s.B = {static_cast<double>(B.real()), static_cast<double>(B.imag())};
    s.a = spec.a;
    s.norm_residual = std::abs(s.A * s.A * detail::normalization_bracket(p.kappa, spec.a) - 1.0);
    return s;
}

inline cplx eval_state(const ResonantState& s, double r) { return s(r); }

/// |A sin(kappa a) - B exp(i kappa a)| / |A|.
inline double continuity_residual(const ResonantState& s) {
    const cplx i{0.0, 1.0};
    const cplx k = s.pole.kappa;
    return std::abs(s.A * std::sin(k * s.a) - s.B * std::exp(i * k * s.a)) / std::abs(s.A);
}

/// |u'(a+) - u'(a-) - lambda u(a)| / (lambda |A|).
inline double derivative_jump_residual(const ResonantState& s, const PotentialSpec& spec) {
    const cplx i{0.0, 1.0};
    const cplx k = s.pole.kappa;
    const cplx outer = s.B * i * k * std::exp(i * k * s.a);
    const cplx inner = s.A * k * std::cos(k * s.a);
    const cplx jump = spec.lambda * s.A * std::sin(k * s.a);
    return std::abs(outer - inner - jump) / (spec.lambda * std::abs(s.A));
}

/// Box state phase * sqrt(2/a) sin(q pi r / a) on [0, a], zero outside.
/// The unit phase is 1 for the states used in practice; it exists so that
/// the conjugated-state coefficients are computed through a genuinely
/// separate path.
struct InitialState {
    int q = 1;
    double a = 1.0;
    cplx phase{1.0, 0.0};

    void validate() const {
        if (q < 1) throw ConfigError("initial_state.q must be a positive integer");
        if (!(a > 0.0)) throw ConfigError("initial state width must be positive");
        if (std::abs(std::abs(phase) - 1.0) > 1e-12) throw ConfigError("initial state phase must have unit modulus");
    }

    double wavenumber() const { return q * std::numbers::pi / a; }

    cplx operator()(double r) const {
        if (r < 0.0 || r > a) return 0.0;
        return phase * std::sqrt(2.0 / a) * std::sin(wavenumber() * r);
    }

    InitialState conjugated() const { return {q, a, std::conj(phase)}; }
};

namespace detail {

// sin(eps a) / eps, switching to its Taylor series near the removable singularity.
inline cplx sine_quotient(cplx eps, double a) {
    const cplx ea = eps * a;
    if (std::abs(ea) < 1e-4) {
        const cplx e2 = ea * ea;
        return a * (1.0 - e2 / 6.0 + e2 * e2 / 120.0);
    }
    return std::sin(ea) / eps;
}

}  // namespace detail

/// C_n = int_0^a Psi(r,0) u_n(r) dr in closed form:
///   phase sqrt(2/a) A / 2 [ sin((k_q - kappa) a)/(k_q - kappa) - sin((k_q + kappa) a)/(k_q + kappa) ].
inline cplx overlap_coefficient(const InitialState& init, const ResonantState& s) {
    if (std::abs(init.a - s.a) > 1e-12 * s.a)
        throw DomainError("overlap_coefficient: initial state and resonant state use different a");
    const double kq = init.wavenumber();
    const cplx k = s.pole.kappa;
    const cplx integral = 0.5 * (detail::sine_quotient(kq - k, s.a) - detail::sine_quotient(kq + k, s.a));
    return init.phase * std::sqrt(2.0 / s.a) * s.A * integral;
}

struct ExpansionCoefficients {
    std::vector<cplx> C;      // overlaps with Psi(r,0)
    std::vector<cplx> C_bar;  // overlaps with Psi*(r,0)

    std::size_t n_terms() const { return C.size(); }
};

inline ExpansionCoefficients expansion_coefficients(const InitialState& init,
                                                    const std::vector<ResonantState>& states) {
    init.validate();
    const InitialState conj_init = init.conjugated();
    ExpansionCoefficients c;
    c.C.reserve(states.size());
    c.C_bar.reserve(states.size());
    for (const auto& s : states) {
        c.C.push_back(overlap_coefficient(init, s));
        c.C_bar.push_back(overlap_coefficient(conj_init, s));
    }
    return c;
}

/// Re sum_{n <= n_terms} C_n Cbar_n; equals 1 in the limit of the full set.
inline double sum_rule_check(const ExpansionCoefficients& coeffs, std::size_t n_terms) {
    if (n_terms > coeffs.n_terms()) throw DomainError("sum_rule_check: n_terms exceeds available coefficients");
    double sum = 0.0;
    for (std::size_t k = n_terms; k-- > 0;) sum += (coeffs.C[k] * coeffs.C_bar[k]).real();
    return sum;
}

inline double sum_rule_check(const ExpansionCoefficients& coeffs) { return sum_rule_check(coeffs, coeffs.n_terms()); }

}  // namespace resdecay
