#pragma once

// Complex resonance poles of the s-wave delta-shell potential V(r) = lambda delta(r - a).
//
// Poles are the fourth-quadrant roots of
//     f(kappa) = 2i kappa + lambda (exp(2i kappa a) - 1).
// Each root is polished by damped Newton iteration in extended precision;
// at n ~ 100 the spacing of representable doubles near kappa_n times |f'|
// already exceeds 1e-12, so a double-only polish cannot reach the default
// tolerance.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "resdecay/errors.hpp"
#include "resdecay/special_functions.hpp"

namespace resdecay {

using cplx_ext = std::complex<long double>;

struct PotentialSpec {
    double lambda = 100.0;  // shell intensity, 1/length
    double a = 1.0;         // shell radius

    void validate() const {
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw ConfigError("potential.lambda must be a positive finite number");
        if (!(a > 0.0) || !std::isfinite(a))
            throw ConfigError("potential.a must be a positive finite number");
    }

    /// Non-empty when lambda a is too small for the approximate pole formula to be a good seed.
    std::optional<std::string> seed_regime_warning() const {
        if (lambda * a >= 10.0) return std::nullopt;
        std::ostringstream os;
        os << "lambda*a = " << lambda * a << " < 10: approximate pole seeds are unreliable";
        return os.str();
    }
};

struct Pole {
    int n = 0;
    cplx_ext kappa_ext;  // extended-precision root
    cplx kappa;          // alpha - i beta, rounded to double
    cplx energy;         // kappa^2 = E_n - i Gamma_n / 2
    double residual = 0.0;

    double alpha() const { return kappa.real(); }
    double beta() const { return -kappa.imag(); }
    double resonance_energy() const { return energy.real(); }
    double width() const { return -2.0 * energy.imag(); }
    /// alpha > beta: the pole contributes an identifiable exponentially decaying term.
    bool proper() const { return alpha() > beta(); }
};

struct SolverOptions {
    double tol = 1e-12;  // on |f(kappa)|, not relative
    int max_iterations = 50;
};

/// 2i kappa + lambda (exp(2i kappa a) - 1).
template <class T>
std::complex<T> pole_equation(std::complex<T> kappa, const PotentialSpec& spec) {
    const std::complex<T> i{0, 1};
    const T lambda = spec.lambda;
    const T a = spec.a;
    return T(2) * i * kappa + lambda * (std::exp(T(2) * i * kappa * a) - T(1));
}

/// d/dkappa of pole_equation: 2i + 2i lambda a exp(2i kappa a).
template <class T>
std::complex<T> pole_equation_derivative(std::complex<T> kappa, const PotentialSpec& spec) {
    const std::complex<T> i{0, 1};
    const T lambda = spec.lambda;
    const T a = spec.a;
    return T(2) * i + T(2) * i * lambda * a * std::exp(T(2) * i * kappa * a);
}

/// (n pi / a)(1 - 1/(lambda a)) - i (1/a)(n pi / (lambda a))^2, valid for lambda a >> 1 and small n.
inline cplx initial_guess(int n, const PotentialSpec& spec) {
    if (n < 1) throw DomainError("initial_guess: n must be >= 1");
    const double la = spec.lambda * spec.a;
    const double npi = n * std::numbers::pi;
    const double ratio = npi / la;
    return {npi / spec.a * (1.0 - 1.0 / la), -ratio * ratio / spec.a};
}

/// Branch number of a root: on the n-th pole,
///     kappa = n pi / a - (i / 2a) Log(1 - 2i kappa / lambda)
/// with the principal logarithm, so this returns n.
inline double branch_index(cplx kappa, const PotentialSpec& spec) {
    const cplx i{0.0, 1.0};
    const cplx w = 2.0 * spec.a * kappa + i * std::log(1.0 - 2.0 * i * kappa / spec.lambda);
    return w.real() / (2.0 * std::numbers::pi);
}

/// -conj(kappa_n): the third-quadrant partner kappa_{-n}.
inline cplx mirror_pole(const Pole& p) { return -std::conj(p.kappa); }
inline cplx mirror_pole(cplx kappa) { return -std::conj(kappa); }

namespace detail {

struct NewtonResult {
    cplx_ext kappa;
    long double residual;
    bool converged;
};

inline NewtonResult damped_newton(cplx_ext kappa, const PotentialSpec& spec, const SolverOptions& opt) {
    long double res = std::abs(pole_equation(kappa, spec));
    for (int it = 0; it < opt.max_iterations; ++it) {
        if (res < opt.tol) return {kappa, res, true};
        const cplx_ext step = pole_equation(kappa, spec) / pole_equation_derivative(kappa, spec);
        long double damping = 1.0L;
        cplx_ext trial = kappa - step;
        long double trial_res = std::abs(pole_equation(trial, spec));
        for (int halvings = 0; halvings < 30 && !(trial_res < res); ++halvings) {
            damping *= 0.5L;
            trial = kappa - damping * step;
            trial_res = std::abs(pole_equation(trial, spec));
        }
        if (!(trial_res < res)) {
            // No descent left in extended precision: accept if already at tolerance.
            return {kappa, res, res < opt.tol};
        }
        kappa = trial;
        res = trial_res;
    }
    return {kappa, res, res < opt.tol};
}

// A few sweeps of the branch-n fixed-point map; a contraction with ratio ~ 1/(lambda a).
inline cplx_ext project_onto_branch(int n, cplx_ext kappa, const PotentialSpec& spec) {
    const cplx_ext i{0, 1};
    const long double npi_a = n * std::numbers::pi_v<long double> / spec.a;
    for (int k = 0; k < 200; ++k) {
        const cplx_ext next =
            npi_a - i / (2.0L * spec.a) * std::log(1.0L - 2.0L * i * kappa / (long double)spec.lambda);
        const bool done = std::abs(next - kappa) < 1e-6L * std::abs(next);
        kappa = next;
        if (done) break;
    }
    return kappa;
}

inline bool on_branch(int n, cplx_ext kappa, const PotentialSpec& spec) {
    const cplx k{static_cast<double>(kappa.real()), static_cast<double>(kappa.imag())};
    return std::abs(branch_index(k, spec) - n) < 0.25;
}

}  // namespace detail

/// Newton-polishes pole n from initial_guess(n). When the approximate formula
/// is outside its regime (large n pi / (lambda a)) and Newton leaves branch n,
/// the seed is first projected onto branch n by fixed-point iteration.
inline Pole solve_pole(int n, const PotentialSpec& spec, const SolverOptions& opt = {}) {
    spec.validate();
    if (n < 1) throw DomainError("solve_pole: n must be >= 1");
    if (!(opt.tol > 0.0)) throw DomainError("solve_pole: tol must be > 0");

    const cplx seed = initial_guess(n, spec);
    auto attempt = [&](cplx_ext start) {
        auto r = detail::damped_newton(start, spec, opt);
        const bool ok = r.converged && detail::on_branch(n, r.kappa, spec);
        return std::pair{r, ok};
    };

    auto [result, ok] = attempt(cplx_ext(seed.real(), seed.imag()));
    if (!ok) std::tie(result, ok) = attempt(detail::project_onto_branch(n, cplx_ext(seed.real(), seed.imag()), spec));

    const cplx found{static_cast<double>(result.kappa.real()), static_cast<double>(result.kappa.imag())};
    if (std::abs(found) < 1e-6 / spec.a) {
        throw SolverError(SolverError::Kind::TrivialRoot, n, found,
                          "solve_pole: iterate collapsed onto the trivial root kappa = 0 for n = " +
                              std::to_string(n));
    }
    if (!result.converged) {
        std::ostringstream os;
        os << "solve_pole: no convergence for n = " << n << " after " << opt.max_iterations
           << " iterations, last iterate " << found << ", residual " << static_cast<double>(result.residual);
        throw SolverError(SolverError::Kind::NotConverged, n, found, os.str());
    }
    if (!ok) {
        std::ostringstream os;
        os << "solve_pole: n = " << n << " converged onto branch " << branch_index(found, spec) << " at "
           << found;
        throw SolverError(SolverError::Kind::BasinJump, n, found, os.str());
    }

    Pole p;
    p.n = n;
    p.kappa_ext = result.kappa;
    p.kappa = found;
    const cplx_ext e = result.kappa * result.kappa;
    p.energy = {static_cast<double>(e.real()), static_cast<double>(e.imag())};
    p.residual = static_cast<double>(result.residual);
    return p;
}

/// Poles n = 1..n_poles ordered by increasing Re kappa.
inline std::vector<Pole> solve_poles(const PotentialSpec& spec, int n_poles, const SolverOptions& opt = {}) {
    if (n_poles < 1) throw DomainError("solve_poles: n_poles must be >= 1");
    std::vector<Pole> poles;
    poles.reserve(n_poles);
    for (int n = 1; n <= n_poles; ++n) poles.push_back(solve_pole(n, spec, opt));

    std::sort(poles.begin(), poles.end(), [](const Pole& l, const Pole& r) { return l.alpha() < r.alpha(); });
    for (std::size_t k = 0; k < poles.size(); ++k) {
        const Pole& p = poles[k];
        if (!(p.alpha() > 0.0 && p.kappa.imag() < 0.0))
            throw SolverError(SolverError::Kind::BasinJump, p.n, p.kappa,
                              "solve_poles: pole outside the fourth quadrant");
        if (k > 0 && std::abs(p.kappa - poles[k - 1].kappa) <= 1e-8 * std::abs(p.kappa))
            throw SolverError(SolverError::Kind::BasinJump, p.n, p.kappa, "solve_poles: duplicate pole");
    }
    return poles;
}

}  // namespace resdecay
