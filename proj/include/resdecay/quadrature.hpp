#pragma once

// Adaptive composite quadrature on 15-point Gauss-Kronrod panels.
//
// The caller supplies the initial partition (so oscillation-aware panel
// widths can be imposed up front). Every sweep evaluates all pending panels,
// possibly in parallel, and bisects those whose error exceeds their
// length-proportional share of the tolerance. Panel sums are accumulated in
// left-to-right pairwise order, so the result does not depend on the thread
// count.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "resdecay/errors.hpp"
#include "resdecay/parallel.hpp"

namespace resdecay {

namespace detail {

// Kronrod abscissae (descending) and weights; Gauss 7-point weights on the odd Kronrod nodes.
inline constexpr std::array<double, 8> xgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> wgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(std::complex<double> v) { return std::abs(v); }

template <class T>
T pairwise_sum(const std::vector<T>& v, std::size_t lo, std::size_t hi) {
    if (hi - lo <= 8) {
        T s{};
        for (std::size_t i = lo; i < hi; ++i) s += v[i];
        return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

}  // namespace detail

template <class T>
struct PanelEstimate {
    T value{};
    double error = 0.0;
};

/// One 15-point Kronrod panel with the QUADPACK error heuristic.
template <class T, class F>
PanelEstimate<T> gauss_kronrod15(const F& f, double lo, double hi) {
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    std::array<T, 15> fv;
    fv[7] = f(center);
    for (int j = 0; j < 7; ++j) {
        const double dx = half * detail::xgk[j];
        fv[j] = f(center - dx);
        fv[14 - j] = f(center + dx);
    }
    T resk = detail::wgk[7] * fv[7];
    T resg = detail::wg[3] * fv[7];
    double resabs = detail::wgk[7] * detail::magnitude(fv[7]);
    for (int j = 0; j < 7; ++j) {
        const T pair = fv[j] + fv[14 - j];
        resk += detail::wgk[j] * pair;
        resabs += detail::wgk[j] * (detail::magnitude(fv[j]) + detail::magnitude(fv[14 - j]));
        if (j % 2 == 1) resg += detail::wg[j / 2] * pair;
    }
    const T reskh = resk * 0.5;
    double resasc = detail::wgk[7] * detail::magnitude(fv[7] - reskh);
    for (int j = 0; j < 7; ++j)
        resasc += detail::wgk[j] * (detail::magnitude(fv[j] - reskh) + detail::magnitude(fv[14 - j] - reskh));

    const double h = std::abs(half);
    resabs *= h;
    resasc *= h;
    double err = detail::magnitude((resk - resg) * half);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
    return {resk * half, err};
}

template <class T>
struct QuadratureResult {
    T value{};
    double error = 0.0;
    std::size_t panels = 0;
    std::size_t evaluations = 0;
};

struct AdaptiveOptions {
    double abs_tol = 1e-6;
    double rel_tol = 1e-8;
    std::size_t max_panels = 2'000'000;
};

/// Integrates f over the union of the given panels (consecutive breakpoints).
template <class T, class F>
QuadratureResult<T> integrate_adaptive(const F& f, std::vector<double> breakpoints, const AdaptiveOptions& opt) {
    if (breakpoints.size() < 2) throw DomainError("integrate_adaptive: need at least one panel");
    for (std::size_t i = 1; i < breakpoints.size(); ++i)
        if (!(breakpoints[i] > breakpoints[i - 1])) throw DomainError("integrate_adaptive: breakpoints must increase");
    if (!(opt.abs_tol > 0.0) || !(opt.rel_tol > 0.0)) throw DomainError("integrate_adaptive: tolerances must be > 0");

    struct Panel {
        double lo, hi;
        PanelEstimate<T> est;
    };
    const double length = breakpoints.back() - breakpoints.front();
    std::vector<Panel> accepted;
    std::vector<Panel> pending;
    pending.reserve(breakpoints.size() - 1);
    for (std::size_t i = 1; i < breakpoints.size(); ++i) pending.push_back({breakpoints[i - 1], breakpoints[i], {}});

    std::size_t evaluations = 0;
    T accepted_value{};
    double accepted_error = 0.0;
    for (;;) {
        parallel_for(pending.size(), [&](std::size_t i) { pending[i].est = gauss_kronrod15<T>(f, pending[i].lo, pending[i].hi); });
        evaluations += 15 * pending.size();

        T total = accepted_value;
        double total_error = accepted_error;
        for (const auto& p : pending) {
            total += p.est.value;
            total_error += p.est.error;
        }
        const double tol = std::max(opt.abs_tol, opt.rel_tol * detail::magnitude(total));
        const bool done = total_error <= tol;

        std::vector<Panel> next;
        for (auto& p : pending) {
            const double share = tol * (p.hi - p.lo) / length;
            if (done || p.est.error <= share || p.hi - p.lo <= 1e-12 * length) {
                accepted_value += p.est.value;
                accepted_error += p.est.error;
                accepted.push_back(p);
            } else {
                const double mid = 0.5 * (p.lo + p.hi);
                next.push_back({p.lo, mid, {}});
                next.push_back({mid, p.hi, {}});
            }
        }
        if (done || next.empty()) break;
        if (accepted.size() + next.size() > opt.max_panels) {
            throw ConvergenceError("integrate_adaptive: panel budget exhausted (estimate " +
                                       std::to_string(detail::magnitude(total)) +
                                       ", error bound " + std::to_string(total_error) + ")",
                                   detail::magnitude(total), total_error);
        }
        pending = std::move(next);
    }

    std::sort(accepted.begin(), accepted.end(), [](const Panel& l, const Panel& r) { return l.lo < r.lo; });
    std::vector<T> values;
    values.reserve(accepted.size());
    double error = 0.0;
    for (const auto& p : accepted) {
        values.push_back(p.est.value);
        error += p.est.error;
    }
    return {detail::pairwise_sum(values, 0, values.size()), error, accepted.size(), evaluations};
}

/// Uniform breakpoints on [lo, hi] with spacing at most max_width.
inline std::vector<double> uniform_breakpoints(double lo, double hi, double max_width) {
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((hi - lo) / max_width)));
    std::vector<double> b(n + 1);
    for (std::size_t i = 0; i <= n; ++i) b[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
    b.back() = hi;
    return b;
}

}  // namespace resdecay
