#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "speckin/detect.hpp"

using namespace speckin;

namespace {

ObservableSeries series_from(double t0, double dt, std::size_t n,
                             const std::function<double(double)>& f,
                             std::size_t realizations = 1000) {
    ObservableSeries s;
    s.label = "F_mu";
    s.realization_count = realizations;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = t0 + dt * static_cast<double>(k);
        s.times.push_back(t);
        s.values.push_back(f(t));
    }
    return s;
}

} // namespace

TEST_CASE("fit_alpha_gamma recovers an exact mixed decay", "[detect][fit]") {
    const auto s = series_from(1.0, 0.25, 197, [](double t) {
        return 3.0 * std::exp(-0.2 * t) / std::sqrt(t);
    });
    const auto fit = fit_alpha_gamma(s, {1.0, 50.0});
    REQUIRE(fit.has_value());
    CHECK(fit->alpha == Catch::Approx(0.2).margin(1e-9));
    CHECK(fit->gamma == Catch::Approx(0.5).margin(1e-9));
    CHECK(fit->amplitude == Catch::Approx(3.0).epsilon(1e-9));
    CHECK(fit->r2 > 0.9999);
}

TEST_CASE("fit_alpha_gamma on a pure power law gives alpha ~ 0", "[detect][fit]") {
    const auto s = series_from(1.0, 0.25, 197, [](double t) { return std::pow(t, -0.75); });
    const auto fit = fit_alpha_gamma(s, {1.0, 50.0});
    REQUIRE(fit.has_value());
    CHECK(std::abs(fit->alpha) < 1e-6);
    CHECK(fit->gamma == Catch::Approx(0.75).margin(1e-9));
}

TEST_CASE("fit_alpha_gamma on a pure exponential bounds the gamma leak", "[detect][fit]") {
    const auto s = series_from(1.0, 0.05, 181, [](double t) { return std::exp(-t); });
    const auto fit = fit_alpha_gamma(s, {1.0, 10.0});
    REQUIRE(fit.has_value());
    CHECK(fit->alpha == Catch::Approx(1.0).margin(0.01));
    CHECK(std::abs(fit->gamma) < 0.1);
    CHECK(fit->condition > 1.0);  // collinearity is reported, not hidden
}

TEST_CASE("fit_alpha_gamma marks noise-floor windows inconclusive", "[detect][fit]") {
    const auto s = series_from(1.0, 0.25, 20, [](double t) { return t < 2.0 ? 1.0 : -1.0; });
    CHECK_FALSE(fit_alpha_gamma(s, {1.0, 5.0}).has_value());
    CHECK_THROWS_AS(fit_alpha_gamma(s, {0.0, 5.0}), std::invalid_argument);
}

TEST_CASE("fit_alpha_gamma is scale equivariant", "[detect][fit][property]") {
    const auto s = series_from(1.0, 0.2, 150, [](double t) {
        return 1.7 * std::exp(-0.4 * t) / std::pow(t, 1.2);
    });
    auto scaled = s;
    for (double& v : scaled.values) v *= 37.5;
    const auto f1 = fit_alpha_gamma(s, {1.0, 25.0});
    const auto f2 = fit_alpha_gamma(scaled, {1.0, 25.0});
    REQUIRE(f1.has_value());
    REQUIRE(f2.has_value());
    CHECK(f2->alpha == Catch::Approx(f1->alpha).margin(1e-10));
    CHECK(f2->gamma == Catch::Approx(f1->gamma).margin(1e-10));
    CHECK(f2->amplitude == Catch::Approx(37.5 * f1->amplitude).epsilon(1e-10));
}

TEST_CASE("exponent fits under 1% multiplicative noise stay within 10%",
          "[detect][fit][property]") {
    NormalStream noise(2027, 5);
    for (const double alpha : {0.0, 0.2, 1.0}) {
        for (const double gamma : {0.0, 0.5, 1.5}) {
            auto s = series_from(0.5, 0.1, 300, [&](double t) {
                return 2.0 * std::exp(-alpha * t) * std::pow(t, -gamma);
            });
            for (double& v : s.values) v *= 1.0 + 0.01 * noise.next();
            const auto fit = fit_alpha_gamma(s, {0.5, 30.0});
            REQUIRE(fit.has_value());
            const double alpha_tol = std::max(0.1 * alpha, 0.02);
            const double gamma_tol = std::max(0.1 * gamma, 0.05);
            CHECK(std::abs(fit->alpha - alpha) < alpha_tol);
            CHECK(std::abs(fit->gamma - gamma) < gamma_tol);
        }
    }
}

TEST_CASE("second_derivative_max is exact on quadratics for any step", "[detect][sd]") {
    for (double dt : {0.01, 0.3, 2.0}) {
        const auto s = series_from(0.0, dt, 64, [](double t) { return t * t; });
        const double dd = second_derivative_max(s, 1, {0.0, 64.0 * dt});
        CHECK(dd == Catch::Approx(2.0).margin(1e-7));
    }
}

TEST_CASE("second_derivative_max of an exponential peaks at the window start",
          "[detect][sd]") {
    const double c = 2.0, lam = 1.5, dt = 0.01, t_lo = 0.5;
    const auto s = series_from(0.0, dt, 400, [&](double t) { return c * std::exp(-lam * t); });
    const double got = second_derivative_max(s, 1, {t_lo, 3.0});
    // Central difference of the exact exponential at the first in-window node.
    const double expect = c * lam * lam * std::exp(-lam * t_lo) *
                          (1.0 + lam * lam * dt * dt / 12.0);
    CHECK(got == Catch::Approx(expect).epsilon(1e-3));
}

TEST_CASE("second_derivative_max validates its window and width", "[detect][sd]") {
    const auto s = series_from(0.0, 0.1, 50, [](double t) { return t; });
    CHECK_THROWS_AS(second_derivative_max(s, 2, {0.0, 5.0}), std::invalid_argument);
    CHECK_THROWS_AS(second_derivative_max(s, 1, {100.0, 101.0}), std::invalid_argument);
}

TEST_CASE("detect_signal verdicts follow the threshold monotonically", "[detect][verdict]") {
    // Rising-then-falling series with curvature ~ 4 at short times.
    std::vector<ModeSeries> modes(1);
    modes[0].mode = 0;
    modes[0].f = series_from(0.0, 0.01, 600, [](double t) {
        return std::exp(2.0 * t) / (1.0 + std::exp(4.0 * (t - 2.0)));
    });
    DetectOptions lo;
    lo.threshold = 1.0;
    DetectOptions hi;
    hi.threshold = 1e9;
    const auto r_lo = detect_signal(modes, lo);
    const auto r_hi = detect_signal(modes, hi);
    REQUIRE(r_lo.per_mode.size() == 1);
    CHECK(r_lo.per_mode[0].verdict == Verdict::signal);
    CHECK(r_hi.per_mode[0].verdict == Verdict::no_signal);  // raising never adds signal
}

TEST_CASE("detect_signal marks degenerate input inconclusive", "[detect][verdict]") {
    std::vector<ModeSeries> modes(1);
    modes[0].mode = 3;
    modes[0].f = series_from(0.0, 0.01, 300, [](double) { return 0.0; });
    const auto r = detect_signal(modes);
    CHECK(r.per_mode[0].verdict == Verdict::inconclusive);
    CHECK_FALSE(r.per_mode[0].fit.has_value());
}

namespace {

PricePanel shared_noise_panel(std::size_t n, std::size_t p, double weight,
                              std::uint64_t seed) {
    PricePanel panel;
    for (std::size_t i = 0; i < n; ++i) panel.tickers.push_back("S" + std::to_string(i));
    for (std::size_t t = 0; t < p; ++t) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "d%05zu", t);
        panel.dates.push_back(buf);
    }
    panel.prices.resize(n * p);
    NormalStream common(seed, 77);
    std::vector<double> factor(p - 1);
    for (auto& x : factor) x = common.next();
    for (std::size_t i = 0; i < n; ++i) {
        NormalStream idio(seed, 1000 + i);
        const double sigma = 0.012 + 0.004 * static_cast<double>(i % 5);
        double ls = std::log(40.0 + static_cast<double>(i % 13));
        panel.prices[i * p] = std::exp(ls);
        for (std::size_t t = 1; t < p; ++t) {
            const double shock =
                weight * factor[t - 1] + std::sqrt(1.0 - weight * weight) * idio.next();
            ls += 0.0003 + sigma * shock;
            panel.prices[i * p + t] = std::exp(ls);
        }
    }
    return panel;
}

} // namespace

TEST_CASE("beta_sweep produces schema-complete deterministic reports", "[detect][sweep]") {
    const auto panel = shared_noise_panel(48, 260, 0.75, 99);
    KineticsConfig cfg;
    cfg.steps = 600;
    cfg.ensemble = 60;
    cfg.seed = 31;

    const auto reports = beta_sweep(panel, {0.0}, {0, 1, 5}, {0.1}, cfg);
    REQUIRE(reports.size() == 1);
    const auto& r = reports[0];
    CHECK(r.beta == 0.0);
    CHECK(r.temperature_ratio == 0.1);
    CHECK(r.critical_temperature > 0.0);
    REQUIRE(r.per_mode.size() == 3);
    for (const auto& m : r.per_mode) CHECK(m.second_derivative != 0.0);

    const auto again = beta_sweep(panel, {0.0}, {0, 1, 5}, {0.1}, cfg);
    for (std::size_t k = 0; k < r.per_mode.size(); ++k) {
        CHECK(again[0].per_mode[k].second_derivative == r.per_mode[k].second_derivative);
        CHECK(again[0].per_mode[k].verdict == r.per_mode[k].verdict);
    }
}

TEST_CASE("beta_sweep rejects empty grids and bad betas", "[detect][sweep]") {
    const auto panel = shared_noise_panel(16, 120, 0.5, 7);
    KineticsConfig cfg;
    CHECK_THROWS_AS(beta_sweep(panel, {}, {0}, {0.1}, cfg), std::invalid_argument);
    CHECK_THROWS_AS(beta_sweep(panel, {2.0}, {0}, {0.1}, cfg), std::invalid_argument);
}

TEST_CASE("beta = 1 sweep on a correlated panel reports no signal at the edge",
          "[detect][sweep][slow]") {
    const auto panel = shared_noise_panel(64, 400, 0.8, 5);
    KineticsConfig cfg;
    cfg.steps = 1200;
    cfg.ensemble = 200;
    cfg.seed = 8;
    const auto reports = beta_sweep(panel, {1.0}, {0, 1}, {0.1}, cfg);
    REQUIRE(reports.size() == 1);
    for (const auto& m : reports[0].per_mode) {
        CHECK(m.verdict == Verdict::no_signal);
    }
}

TEST_CASE("more negative beta decays the edge mode faster", "[detect][sweep][slow]") {
    // alpha at the bulk edge grows as the panel becomes more correlated.
    const auto panel = shared_noise_panel(64, 400, 0.55, 11);
    KineticsConfig cfg;
    cfg.steps = 1500;
    cfg.ensemble = 150;
    cfg.seed = 21;
    const auto reports = beta_sweep(panel, {-0.4, 0.4}, {0}, {0.1}, cfg);
    REQUIRE(reports.size() == 2);
    const auto& strong = reports[0].per_mode[0];
    const auto& weak = reports[1].per_mode[0];
    REQUIRE(strong.fit.has_value());
    REQUIRE(weak.fit.has_value());
    CHECK(strong.fit->alpha > weak.fit->alpha);
}
