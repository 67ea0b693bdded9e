#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "speckin/analytics.hpp"
#include "support/oracles.hpp"

using namespace speckin;

namespace {

// Numerical Laplace transform of h_of_t with the t = u^2 substitution that
// removes the t^{-1/2} singularity of the MP closed form at the origin.
double laplace_of_h(const SpectralDensity& rho, double p, double u_max) {
    return oracle::adaptive_simpson(
        [&](double u) { return 2.0 * u * std::exp(-p * u * u) * h_of_t(rho, u * u); },
        1e-8, u_max, 1e-10);
}

} // namespace

TEST_CASE("discrete H at t = 0 is one and a zero mode never decays", "[analytics][h]") {
    const auto rho = SpectralDensity::discrete({0.1, 0.7, 2.0});
    CHECK(h_of_t(rho, 0.0) == 1.0);
    const auto zero = SpectralDensity::discrete({0.0});
    for (double t : {0.0, 1.0, 57.0}) CHECK(h_of_t(zero, t) == 1.0);
    CHECK_THROWS_AS(h_of_t(rho, -0.1), std::invalid_argument);
}

TEST_CASE("mp_closed H transforms to the closed-form Hbar", "[analytics][h]") {
    const auto rho = SpectralDensity::mp_closed(1.0);
    const double numeric = laplace_of_h(rho, 1.0, 12.0);
    CHECK(numeric == Catch::Approx(1.0 / (2.0 * std::sqrt(2.0) + 2.0)).epsilon(1e-4));
    CHECK(h_bar_mp(1.0, 1.0) == Catch::Approx(0.2071067811865475).epsilon(1e-12));
    CHECK_THROWS_AS(h_of_t(rho, 0.0), std::invalid_argument);
}

TEST_CASE("h_bar_mp values and monotonicity", "[analytics][h]") {
    CHECK(h_bar_mp(0.0, 1.0) == 0.5);
    CHECK(h_bar_mp(2.0, 1.0) == Catch::Approx(1.0 / 6.0).epsilon(1e-14));
    double prev = h_bar_mp(0.0, 1.3);
    for (double p : {0.1, 0.5, 1.0, 4.0, 20.0}) {
        const double cur = h_bar_mp(p, 1.3);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("discrete H is completely monotone on a grid", "[analytics][h][property]") {
    const auto ks = mp_kinetic_spectrum({1.0, 0.5}, 300, 20.0);
    const auto rho = SpectralDensity::from_kinetic(ks);
    const TimeGrid grid{0.01, 800};
    const auto h = h_series(rho, grid);
    for (std::size_t k = 0; k < h.size(); ++k) CHECK(h.values[k] > 0.0);
    for (std::size_t k = 1; k < h.size(); ++k) CHECK(h.values[k] <= h.values[k - 1]);
    for (std::size_t k = 2; k < h.size(); ++k)
        CHECK(h.values[k] - 2.0 * h.values[k - 1] + h.values[k - 2] >= -1e-12);
}

TEST_CASE("Laplace consistency for discrete spectra", "[analytics][h][property]") {
    const auto rho = SpectralDensity::discrete({0.2, 0.5, 1.0, 1.7, 3.1});
    for (double p : {0.5, 1.0, 5.0}) {
        double expect = 0.0;
        for (double lam : rho.lambdas) expect += 1.0 / (p + 2.0 * lam);
        expect /= static_cast<double>(rho.lambdas.size());
        const double numeric = laplace_of_h(rho, p, 18.0);
        CHECK(numeric == Catch::Approx(expect).epsilon(1e-6));
        CHECK(h_bar(rho, p) == Catch::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("critical temperature closed forms", "[analytics][tc]") {
    CHECK(critical_temperature(2.0, SpectralDensity::mp_closed(1.0)).value ==
          Catch::Approx(2.0).margin(1e-12));
    CHECK(critical_temperature(10.0, SpectralDensity::mp_closed(3.0)).value ==
          Catch::Approx(30.0).margin(1e-12));
    const auto single = SpectralDensity::discrete({1.0});
    CHECK(critical_temperature(1.7, single).value == Catch::Approx(1.7).epsilon(1e-14));
}

TEST_CASE("critical temperature excludes rates below epsilon", "[analytics][tc]") {
    auto rho = SpectralDensity::discrete({0.0, 1.0}, 1e-6);
    const auto tc = critical_temperature(1.0, rho);
    CHECK(tc.excluded_modes == 1);
    // Hbar(0) = (1/2) * [1/(2*1)] = 0.25 with the zero mode's mass dropped.
    CHECK(tc.value == Catch::Approx(1.0 / (2.0 * 0.25)).epsilon(1e-14));

    auto all_zero = SpectralDensity::discrete({0.0, 0.0}, 1e-6);
    CHECK_THROWS_AS(critical_temperature(1.0, all_zero), ComputeError);
}

TEST_CASE("g_bar closed equation", "[analytics][gbar]") {
    const auto rho = SpectralDensity::mp_closed(1.0);
    // T = 0 reduces to Hbar / a0.
    for (double p : {0.3, 1.0, 4.0})
        CHECK(g_bar(p, 2.0, 0.0, rho) ==
              Catch::Approx(h_bar_mp(p, 1.0) / 2.0).epsilon(1e-14));
    // Worked value at T = T_c / 2.
    CHECK(g_bar(1.0, 2.0, 1.0, rho) == Catch::Approx(0.13060193).epsilon(1e-6));
    // p -> 0 limit below T_c stays finite and matches the algebraic limit.
    const double lim = 0.5 / (2.0 / (2.0 * h_bar_mp(0.0, 1.0)) - 1.0);
    CHECK(g_bar(1e-12, 2.0, 1.0, rho) == Catch::Approx(lim).epsilon(1e-5));
    // At or above T_c the denominator dies.
    CHECK_THROWS_AS(g_bar(1e-12, 2.0, 2.0001, rho), ComputeError);
}

TEST_CASE("volterra at T = 0 returns H / a0 exactly", "[analytics][volterra]") {
    const auto rho = SpectralDensity::discrete({0.3, 1.2, 2.5});
    const TimeGrid grid{0.05, 200};
    const auto g = solve_g_volterra(1.7, 0.0, rho, grid);
    const auto h = h_series(rho, grid);
    for (std::size_t k = 0; k < g.size(); ++k)
        CHECK(g.values[k] == h.values[k] / 1.7);
}

TEST_CASE("volterra matches the Picard oracle on a refined grid", "[analytics][volterra]") {
    const auto rho = SpectralDensity::discrete({1.0});
    const double a0 = 1.0, temperature = 0.1;
    const TimeGrid coarse{0.02, 400};

    const auto g = solve_g_volterra(a0, temperature, rho, coarse);

    // Oracle on a 4x finer grid, then compared at the coarse nodes.
    const TimeGrid fine{coarse.dt / 4.0, coarse.steps * 4};
    std::vector<double> h_fine;
    for (double t : fine.times()) h_fine.push_back(h_of_t(rho, t));
    const auto g_fine = oracle::picard_volterra(h_fine, fine.dt, a0, temperature);

    double max_rel = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double ref = g_fine[4 * k];
        max_rel = std::max(max_rel, std::abs(g.values[k] - ref) / std::abs(ref));
    }
    CHECK(max_rel < 1e-3);
}

TEST_CASE("volterra is second order: halving dt gains >= 3.5x", "[analytics][volterra]") {
    const auto rho = SpectralDensity::discrete({0.4, 1.0, 2.2});
    const double a0 = 1.5, temperature = 0.2, t_end = 8.0;

    const TimeGrid ref_grid{t_end / 4096.0, 4096};
    std::vector<double> h_ref;
    for (double t : ref_grid.times()) h_ref.push_back(h_of_t(rho, t));
    const auto g_ref = oracle::picard_volterra(h_ref, ref_grid.dt, a0, temperature);

    double errs[2];
    const std::size_t steps[2] = {256, 512};
    for (int i = 0; i < 2; ++i) {
        const TimeGrid grid{t_end / static_cast<double>(steps[i]), steps[i]};
        const auto g = solve_g_volterra(a0, temperature, rho, grid);
        const std::size_t stride = 4096 / steps[i];
        double err = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k)
            err = std::max(err, std::abs(g.values[k] - g_ref[stride * k]));
        errs[i] = err;
    }
    CHECK(errs[0] / errs[1] >= 3.5);
}

TEST_CASE("volterra rejects bad grids and supercritical implicit steps",
          "[analytics][volterra]") {
    const auto rho = SpectralDensity::discrete({5.0});
    CHECK_THROWS_AS(solve_g_volterra(1.0, 0.1, rho, TimeGrid{0.1, 100}),
                    std::invalid_argument);  // dt * 2 lambda = 1 > 0.5
    const auto soft = SpectralDensity::discrete({0.01});
    CHECK_THROWS_AS(solve_g_volterra(0.01, 100.0, soft, TimeGrid{0.01, 10}),
                    ComputeError);  // T dt H0 / a0 = 10 > 1
}

TEST_CASE("a_closed returns a0 on self-consistent inputs", "[analytics][aclosed]") {
    const auto ks = mp_kinetic_spectrum({1.0, 0.5}, 200, 20.0);
    const auto rho = SpectralDensity::from_kinetic(ks);
    const double a0 = 2.0;
    const double t_c = critical_temperature(a0, rho).value;
    const double temperature = 0.5 * t_c;
    const TimeGrid grid{0.01, 500};

    const auto g = solve_g_volterra(a0, temperature, rho, grid);
    const auto h = h_series(rho, grid);
    const auto f = convolve_trapezoid(h, g);
    const auto a = a_closed(g, h, f, temperature);
    for (double v : a.values) CHECK(v == Catch::Approx(a0).epsilon(1e-6));

    // T = 0 with G = H/a0 gives a0 exactly.
    const auto g0 = solve_g_volterra(a0, 0.0, rho, grid);
    const auto f0 = convolve_trapezoid(h, g0);
    const auto a_zero = a_closed(g0, h, f0, 0.0);
    for (double v : a_zero.values) CHECK(v == Catch::Approx(a0).epsilon(1e-12));

    // Scaling: multiplying G by 1.1 divides a by 1.1.
    auto g_scaled = g;
    for (double& v : g_scaled.values) v *= 1.1;
    const auto a_scaled = a_closed(g_scaled, h, f, temperature);
    for (std::size_t k = 0; k < a_scaled.size(); ++k)
        CHECK(a_scaled.values[k] == Catch::Approx(a.values[k] / 1.1).epsilon(1e-12));

    auto g_bad = g;
    g_bad.values[3] = 0.0;
    CHECK_THROWS_AS(a_closed(g_bad, h, f, temperature), ComputeError);
}

TEST_CASE("tail_exponent nails an exact power law and flags an exponential",
          "[analytics][tail]") {
    ObservableSeries s;
    s.label = "G";
    for (int k = 1; k <= 400; ++k) {
        const double t = 0.05 * k;
        s.times.push_back(t);
        s.values.push_back(2.7 * std::pow(t, -1.5));
    }
    const auto fit = tail_exponent(s, 0.25);
    CHECK(fit.exponent == Catch::Approx(-1.5).margin(1e-6));
    CHECK(std::abs(fit.curvature) < 1e-8);

    ObservableSeries e;
    e.label = "G";
    for (int k = 1; k <= 400; ++k) {
        const double t = 0.05 * k;
        e.times.push_back(t);
        e.values.push_back(std::exp(-t));
    }
    const auto efit = tail_exponent(e, 0.25);
    // e^{-t} is log-log concave: strong curvature flags the non-power-law.
    CHECK(std::abs(efit.curvature) > 0.1);

    ObservableSeries z = e;
    z.values[390] = 0.0;
    CHECK_THROWS_AS(tail_exponent(z, 0.25), ComputeError);
}

TEST_CASE("volterra G: subcritical power-law tail, supercritical growth",
          "[analytics][volterra][slow]") {
    const auto ks = mp_kinetic_spectrum({1.0, 0.5}, 200, 20.0);
    const auto rho = SpectralDensity::from_kinetic(ks);
    const double a0 = 2.0;
    const double t_c = critical_temperature(a0, rho).value;

    const TimeGrid grid{0.012, 4000};  // dt * 2 lambda_max = 0.48
    const auto sub = solve_g_volterra(a0, 0.5 * t_c, rho, grid);
    // log-log slope on late times is negative (power-law decay regime)
    const auto sub_fit = tail_exponent(sub, 0.3);
    CHECK(sub_fit.exponent < -0.5);

    const auto super = solve_g_volterra(a0, 1.5 * t_c, rho, grid);
    // log-slope (not log-log) on the last quarter must be positive
    std::vector<double> ts, ls;
    for (std::size_t k = 3 * super.size() / 4; k < super.size(); ++k) {
        ts.push_back(super.times[k]);
        ls.push_back(std::log(super.values[k]));
    }
    CHECK(linear_fit(ts, ls).slope > 0.0);
}
