#pragma once

// Complex error (Faddeyeva) function w(z) = exp(-z^2) erfc(-iz) and the
// Moshinsky transient function M built on it.
//
// The upper half-plane evaluator follows the Poppe-Wijers region split:
// a Taylor series near the origin, a Laplace continued fraction far out,
// and in between a truncated Taylor expansion of w about z + ih whose
// coefficients come from the same continued fraction. The lower
// half-plane is reached only through w(-z) = 2 exp(-z^2) - w(z).

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "resdecay/errors.hpp"

namespace resdecay {

using cplx = std::complex<double>;

namespace detail {

inline constexpr double two_over_sqrt_pi = 2.0 * std::numbers::inv_sqrtpi;

// w(x + iy) for x >= 0, y >= 0.
inline cplx faddeyeva_first_quadrant(double x, double y) {
    const double xs = x / 6.3;
    const double ys = y / 4.4;
    double qrho = xs * xs + ys * ys;
    const double xquad = x * x - y * y;
    const double yquad = 2.0 * x * y;

    if (qrho < 0.085264) {
        // Taylor series of erf about the origin, then w = exp(-z^2) (1 - erf(-iz)).
        qrho = (1.0 - 0.85 * ys) * std::sqrt(qrho);
        const int n = static_cast<int>(std::lround(6.0 + 72.0 * qrho));
        int j = 2 * n + 1;
        double xsum = 1.0 / j;
        double ysum = 0.0;
        for (int i = n; i >= 1; --i) {
            j -= 2;
            const double xaux = (xsum * xquad - ysum * yquad) / i;
            ysum = (xsum * yquad + ysum * xquad) / i;
            xsum = xaux + 1.0 / j;
        }
        const double u1 = 1.0 - two_over_sqrt_pi * (xsum * y + ysum * x);
        const double v1 = two_over_sqrt_pi * (xsum * x - ysum * y);
        const double e = std::exp(-xquad);
        const double u2 = e * std::cos(yquad);
        const double v2 = -e * std::sin(yquad);
        return {u1 * u2 - v1 * v2, u1 * v2 + v1 * u2};
    }

    double h = 0.0;
    int kapn = 0;
    int nu = 0;
    if (qrho > 1.0) {
        qrho = std::sqrt(qrho);
        nu = static_cast<int>(3.0 + 1442.0 / (26.0 * qrho + 77.0));
    } else {
        qrho = (1.0 - ys) * std::sqrt(1.0 - qrho);
        h = 1.88 * qrho;
        kapn = static_cast<int>(std::lround(7.0 + 34.0 * qrho));
        nu = static_cast<int>(std::lround(16.0 + 26.0 * qrho));
    }
    const double h2 = 2.0 * h;
    const bool use_taylor = h > 0.0;
    double qlambda = use_taylor ? std::pow(h2, kapn) : 0.0;

    double rx = 0.0, ry = 0.0, sx = 0.0, sy = 0.0;
    for (int n = nu; n >= 0; --n) {
        const double np1 = n + 1;
        double tx = y + h + np1 * rx;
        double ty = x - np1 * ry;
        const double c = 0.5 / (tx * tx + ty * ty);
        rx = c * tx;
        ry = c * ty;
        if (use_taylor && n <= kapn) {
            tx = qlambda + sx;
            sx = rx * tx - ry * sy;
            sy = ry * tx + rx * sy;
            qlambda /= h2;
        }
    }
    double u = two_over_sqrt_pi * (use_taylor ? sx : rx);
    const double v = two_over_sqrt_pi * (use_taylor ? sy : ry);
    if (y == 0.0) u = std::exp(-x * x);
    return {u, v};
}

// w(z) for Im z >= 0.
inline cplx faddeyeva_upper(cplx z) {
    const cplx w = faddeyeva_first_quadrant(std::abs(z.real()), z.imag());
    return z.real() < 0.0 ? std::conj(w) : w;
}

// exp(s) with the magnitude carried in log form; throws if the result overflows.
inline cplx exp_checked(cplx s, const char* what) {
    constexpr double log_max = 709.782712893384;  // log(DBL_MAX)
    if (s.real() > log_max) throw OverflowError(what);
    return std::polar(std::exp(s.real()), s.imag());
}

}  // namespace detail

/// Faddeyeva function w(z) = exp(-z^2) erfc(-iz) for any finite z.
///
/// Relative accuracy is about 1e-13 in the upper half-plane. Below the real
/// axis the reflection w(z) = 2 exp(-z^2) - w(-z) is applied; the factor
/// exp(-z^2) grows like exp(|Im z|^2) there and an OverflowError is raised
/// when it leaves the double range.
inline cplx faddeyeva(cplx z) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw DomainError("faddeyeva: non-finite argument");
    if (z.imag() >= 0.0) return detail::faddeyeva_upper(z);
    const cplx e = detail::exp_checked(-z * z + std::numbers::ln2,
                                       "faddeyeva: 2 exp(-z^2) overflows below the real axis");
    return e - detail::faddeyeva_upper(-z);
}

/// Argument y of the transient function together with the (r - a, t, kappa)
/// it was built from; M needs the context for its phase prefactor.
struct TransientArgument {
    cplx y;
    double x;  // r - a
    double t;
    cplx kappa;
};

/// y = exp(-i pi/4) (1/4t)^{1/2} [(r - a) - 2 kappa t]. At r = a this is
/// -exp(-i pi/4) kappa t^{1/2}.
inline TransientArgument transient_argument(double r, double a, double t, cplx kappa) {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("transient_argument: t must be > 0");
    if (!(a > 0.0)) throw DomainError("transient_argument: a must be > 0");
    if (!std::isfinite(r) || !std::isfinite(kappa.real()) || !std::isfinite(kappa.imag()))
        throw DomainError("transient_argument: non-finite input");
    const double x = r - a;
    const cplx rot{std::numbers::sqrt2 / 2.0, -std::numbers::sqrt2 / 2.0};
    const cplx y = rot * (x - 2.0 * kappa * t) / (2.0 * std::sqrt(t));
    return {y, x, t, kappa};
}

/// exp(i kappa (r - a)) exp(-i kappa^2 t), i.e. M(y) + M(-y).
inline cplx transient_plane_wave(const TransientArgument& arg) {
    const cplx i{0.0, 1.0};
    return detail::exp_checked(i * arg.kappa * arg.x - i * arg.kappa * arg.kappa * arg.t,
                               "transient_M: exp(i kappa x - i kappa^2 t) overflows");
}

/// Moshinsky function M(y) = 1/2 exp(i(r-a)^2/4t) w(iy).
///
/// For Re y < 0 it is assembled as exp(i kappa x - i kappa^2 t) - M(-y) so that
/// w is only ever called with Im >= 0.
inline cplx transient_M(const TransientArgument& arg) {
    const double phase = arg.x * arg.x / (4.0 * arg.t);
    const cplx prefactor = std::polar(0.5, phase);
    const cplx iy{-arg.y.imag(), arg.y.real()};
    if (arg.y.real() >= 0.0) return prefactor * detail::faddeyeva_upper(iy);
    return transient_plane_wave(arg) - prefactor * detail::faddeyeva_upper(-iy);
}

inline constexpr double asymptotic_M_min_abs_y = 8.0;
inline constexpr int asymptotic_M_max_terms = 10;

/// Large-|y| expansion of M:
///   1/2 exp(i(r-a)^2/4t) [1/(sqrt(pi) y)] sum_k (-1)^k (2k-1)!! / (2y^2)^k
/// with n_terms terms. The half-plane Re y < 0 goes through the same
/// reflection as transient_M.
inline cplx transient_M_asymptotic(const TransientArgument& arg, int n_terms) {
    if (std::abs(arg.y) < asymptotic_M_min_abs_y)
        throw DomainError("transient_M_asymptotic: |y| < 8, use transient_M");
    if (n_terms < 1 || n_terms > asymptotic_M_max_terms)
        throw DomainError("transient_M_asymptotic: n_terms must be in [1, 10]");

    const bool reflect = arg.y.real() < 0.0;
    const cplx y = reflect ? -arg.y : arg.y;
    const cplx inv_2y2 = 1.0 / (2.0 * y * y);
    cplx term = 1.0;
    cplx sum = 1.0;
    for (int k = 1; k < n_terms; ++k) {
        term *= -static_cast<double>(2 * k - 1) * inv_2y2;
        sum += term;
    }
    const cplx series = sum * std::numbers::inv_sqrtpi / y;
    const cplx half_wave = std::polar(0.5, arg.x * arg.x / (4.0 * arg.t)) * series;
    return reflect ? transient_plane_wave(arg) - half_wave : half_wave;
}

}  // namespace resdecay
