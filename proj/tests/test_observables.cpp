#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "resdecay/observables.hpp"

using namespace resdecay;

namespace {

const DecaySolution& solution(int q = 1, int n = 100) {
    static std::map<std::pair<int, int>, DecaySolution> cache;
    auto key = std::make_pair(q, n);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, make_decay_solution({}, {q, 1.0}, n, {{}, 1.0})).first;
    return it->second;
}

// A(t) from the expansion directly: the overlap of Psi*(r,0) with u_n is Cbar_n and
// with conj(u_n) is conj(C_n).
cplx survival_series(const DecaySolution& sol, double t) {
    const auto slice = interior_slice(sol, t);
    cplx sum = 0.0;
    for (std::size_t k = 0; k < sol.size(); ++k) {
        const cplx c = sol.coeffs.C[k], cb = sol.coeffs.C_bar[k];
        sum += c * cb * slice.m_pole[k] + std::conj(cb * c) * slice.m_mirror[k];
    }
    return sum;
}

}  // namespace

TEST(Observables, InitialInstant) {
    const auto& sol = solution();
    const auto snap = unitarity_check(sol, 0.0);
    EXPECT_NEAR(snap.I_in, 1.0, 1e-10);
    EXPECT_EQ(snap.I_ex, 0.0);
    EXPECT_LT(std::abs(snap.deficit), 1e-10);
    const auto s = survival_amplitude(sol, 0.0);
    EXPECT_LT(std::abs(s.amplitude - 1.0), 1e-10);
}

TEST(Observables, UnitarityAtOneLifetime) {
    const auto& sol = solution();
    const double tau = sol.lifetime();
    const auto snap = unitarity_check(sol, tau);
    EXPECT_GE(snap.I_in + snap.I_ex, 0.999);
    EXPECT_LE(snap.I_in + snap.I_ex, 1.0 + 1e-6);
    EXPECT_NEAR(snap.I_in / std::exp(-1.0), 1.0, 0.15);
    EXPECT_GE(snap.I_in, 0.0);
    EXPECT_GE(snap.I_ex, 0.0);
    EXPECT_TRUE(snap.warnings.empty());
    EXPECT_LT(snap.I_in_error + snap.I_ex_error, 1e-6);
}

TEST(Observables, ExternalIntegralAtHalfLifetime) {
    const auto& sol = solution();
    const double t = 0.5 * sol.lifetime();
    const auto in = integrate_internal(sol, t);
    const auto ex = integrate_external(sol, t);
    EXPECT_NEAR(ex.value, 1.0 - in.value, 1e-3);
    EXPECT_LT(ex.tail_estimate, 1e-4);
    EXPECT_GT(ex.tail_estimate, 0.0);
    const double s0 = std::abs(asymptotic_tail_constant(sol));
    EXPECT_NEAR(ex.tail_estimate, t * s0 * s0 / (std::numbers::pi * (4000.0 - 1.0)), 1e-18);
}

TEST(Observables, OscillationRefinementIsStable) {
    const auto& sol = solution();
    const double t = 0.5 * sol.lifetime();
    QuadratureConfig fine;
    fine.min_points_per_oscillation = 40.0;
    EXPECT_LT(std::abs(integrate_external(sol, t).value - integrate_external(sol, t, fine).value), 1e-5);
}

TEST(Observables, TighterTolerancesAgree) {
    const auto& sol = solution();
    const double t = 0.5 * sol.lifetime();
    QuadratureConfig tight;
    tight.abs_tol = 0.5e-6;
    tight.rel_tol = 0.5e-8;
    const auto a = integrate_internal(sol, t);
    const auto b = integrate_internal(sol, t, tight);
    EXPECT_LE(std::abs(a.value - b.value), std::max(a.error + b.error, 1e-6));
    const auto c = integrate_external(sol, t);
    const auto d = integrate_external(sol, t, tight);
    EXPECT_LE(std::abs(c.value - d.value), std::max(c.error + d.error, 1e-6));
}

TEST(Observables, NonescapeProbabilityDecreases) {
    const auto& sol = solution();
    double previous = 1.0 + 1e-10;
    for (double f : {0.0, 0.1, 0.3, 0.7, 1.5, 3.0}) {
        const double p = integrate_internal(sol, f * sol.lifetime()).value;
        EXPECT_LE(p, previous + 1e-8) << "t/tau = " << f;
        previous = p;
    }
}

TEST(Observables, SurvivalMatchesExpansion) {
    const auto& sol = solution();
    for (double t : {1.0, 20.0, 84.0, 170.0}) {
        const auto s = survival_amplitude(sol, t);
        EXPECT_LT(std::abs(s.amplitude - survival_series(sol, t)), 1e-8) << "t = " << t;
    }
}

TEST(Observables, SurvivalBelowNonescape) {
    for (int q : {1, 2}) {
        const auto& sol = solution(q);
        for (double f : {0.05, 0.5, 1.0, 2.0}) {
            const double t = f * sol.lifetime();
            EXPECT_LE(survival_amplitude(sol, t).probability, integrate_internal(sol, t).value + 1e-8);
        }
    }
}

TEST(Observables, SurvivalDecaysAtFirstWidth) {
    const auto& sol = solution();
    const double tau = sol.lifetime();
    std::vector<double> t, s;
    for (double f = 0.5; f <= 2.0; f += 0.25) {
        t.push_back(f * tau);
        s.push_back(survival_amplitude(sol, f * tau).probability);
    }
    EXPECT_NEAR(-log_slope(t, s) * tau, 1.0, 0.1);
}

TEST(Observables, LogSlope) {
    const std::vector<double> t{0.0, 1.0, 2.0, 3.0};
    std::vector<double> s;
    for (double x : t) s.push_back(2.0 * std::exp(-0.3 * x));
    EXPECT_NEAR(log_slope(t, s), -0.3, 1e-14);
    EXPECT_THROW(log_slope(std::vector<double>{1.0}, std::vector<double>{1.0}), DomainError);
    EXPECT_THROW(log_slope(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 0.0}), DomainError);
}

TEST(Observables, TruncatedFrontNegativeControl) {
    const auto& sol = solution();
    QuadratureConfig cfg;
    cfg.r_max = 2.0;
    const auto snap = unitarity_check(sol, 2.0 * sol.lifetime(), cfg);
    ASSERT_FALSE(snap.warnings.empty());
    EXPECT_NE(snap.warnings.front().find("truncated front"), std::string::npos);
    EXPECT_GT(snap.deficit, 0.5);
}

TEST(Observables, SinglePoleTruncationLosesProbability) {
    const double tau = solution().lifetime();
    // q = 1: the first pole carries almost all the weight, yet the truncated
    // total still falls below the full expansion's.
    const auto toy = unitarity_check(solution(1, 1), tau);
    const auto full = unitarity_check(solution(1, 100), tau);
    EXPECT_GT(toy.deficit, 2.0 * full.deficit);
    EXPECT_GT(toy.deficit, 2e-4);
    // q = 2 with only the first pole: most of the state is missing.
    EXPECT_GT(unitarity_check(solution(2, 1), tau).deficit, 0.01);
}

TEST(Observables, FluxScanValidation) {
    const auto& sol = solution();
    EXPECT_THROW(flux_conservation_scan(sol, {1.0, 2.0}), DomainError);
    EXPECT_THROW(flux_conservation_scan(sol, {1.0, 1.0, 2.0}), DomainError);
    EXPECT_THROW(flux_conservation_scan(sol, {-1.0, 1.0, 2.0}), DomainError);
}

TEST(Observables, WavefrontsAndMainPeak) {
    const auto& sol = solution();
    const double tau = sol.lifetime();
    const auto fronts = wavefront_positions(sol, tau);
    ASSERT_EQ(fronts.size(), sol.size());
    EXPECT_EQ(fronts[0].n, 1);
    EXPECT_DOUBLE_EQ(fronts[0].r - sol.a(), 2.0 * sol.pole(0).alpha() * tau);
    EXPECT_THROW(wavefront_positions(sol, 0.0), DomainError);

    // Main front at t = tau: the density peaks within a few 1/beta_1 of r_1.
    std::vector<double> grid;
    for (double r = 1.0; r <= 1200.0; r += 0.5) grid.push_back(r);
    const auto density = density_profile(sol, grid, tau);
    const auto peaks = local_maxima(density);
    ASSERT_FALSE(peaks.empty());
    std::size_t top = peaks.front();
    for (auto i : peaks)
        if (density[i] > density[top]) top = i;
    EXPECT_LT(std::abs(grid[top] - fronts[0].r), 5.0 / sol.pole(0).beta() * 0.1 + 50.0);
}

TEST(Observables, SecondStateLaunchesFasterFront) {
    const auto& sol = solution(2);
    const double t = 0.5 * sol.lifetime();
    std::vector<double> grid;
    for (double r = 1.0; r <= 2000.0; r += 0.5) grid.push_back(r);
    const auto density = density_profile(sol, grid, t);
    const auto scan = match_forerunners(sol, t, grid, density);
    ASSERT_GE(scan.rows.size(), 2u);
    ASSERT_TRUE(scan.rows[1].r_peak.has_value());
    EXPECT_LT(std::abs(*scan.rows[1].relative_offset), 0.05);
    EXPECT_TRUE(scan.rows[0].r_peak.has_value());
}

TEST(Observables, ForerunnersAtHalfLifetime) {
    const auto& sol = solution();
    const double t = 0.5 * sol.lifetime();
    std::vector<double> grid;
    for (double r = 1.0; r <= 4000.0; r += 0.25) grid.push_back(r);
    const auto scan = match_forerunners(sol, t, grid, density_profile(sol, grid, t));
    EXPECT_TRUE(scan.warnings.empty());
    ASSERT_GE(scan.rows.size(), 10u);
    for (int n = 2; n <= 10; ++n) {
        const auto& row = scan.rows[n - 1];
        EXPECT_EQ(row.n, n);
        ASSERT_TRUE(row.relative_offset.has_value()) << "n = " << n;
        EXPECT_LT(std::abs(*row.relative_offset), 0.05) << "n = " << n;
    }
}

TEST(Observables, CoarseGridWarns) {
    const auto& sol = solution();
    const double t = 0.5 * sol.lifetime();
    std::vector<double> grid;
    for (int i = 0; i < 100; ++i) grid.push_back(1.0 + 3999.0 * i / 99.0);
    const auto scan = match_forerunners(sol, t, grid, density_profile(sol, grid, t));
    EXPECT_FALSE(scan.warnings.empty());
}

TEST(Observables, DensityProfileMatchesWavefunction) {
    const auto& sol = solution();
    const std::vector<double> grid{0.0, 0.3, 1.0, 1.5, 30.0};
    const double t = 12.0;
    const auto d = density_profile(sol, grid, t);
    EXPECT_EQ(d[1], std::norm(psi_internal(sol, 0.3, t)));
    EXPECT_EQ(d[2], std::norm(psi_internal(sol, 1.0, t)));
    EXPECT_EQ(d[4], std::norm(psi_external(sol, 30.0, t)));
    for (double v : d) EXPECT_GE(v, 0.0);
}

TEST(Observables, ConfigValidation) {
    QuadratureConfig cfg;
    cfg.r_max = 0.5;
    EXPECT_THROW(cfg.validate(1.0), ConfigError);
    cfg = {};
    cfg.min_points_per_oscillation = 4.0;
    EXPECT_THROW(cfg.validate(1.0), ConfigError);
    cfg = {};
    cfg.abs_tol = 0.0;
    EXPECT_THROW(cfg.validate(1.0), ConfigError);
    EXPECT_THROW(integrate_internal(solution(), -1.0), DomainError);
    EXPECT_THROW(integrate_external(solution(), -1.0), DomainError);
}
