#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "speckin/kinetics.hpp"

using namespace speckin;

namespace {

KineticSpectrum spectrum_from(std::vector<double> lambdas) {
    KineticSpectrum ks;
    std::sort(lambdas.begin(), lambdas.end());
    ks.lambdas = std::move(lambdas);
    ks.edge_span = 1.0;
    return ks;
}

// Exact moments of the Euler-Maruyama chain for the linear (h1 = 0) problem:
//   q_{n+1} = q_n (1 - k dt) + sqrt(2 T dt) xi.
// Comparing the Monte Carlo ensemble against these isolates pure sampling
// error; comparing them against the continuous OU formulas isolates the
// O(dt) discretization bias.
struct OUChain {
    double decay;      // (1 - k dt)^n
    double variance;   // 2 T dt * sum (1 - k dt)^{2j}
};

OUChain ou_chain_moments(double k, double temperature, double dt, std::size_t n) {
    const double g = 1.0 - k * dt;
    OUChain m;
    m.decay = std::pow(g, static_cast<double>(n));
    const double g2 = g * g;
    m.variance = 2.0 * temperature * dt *
                 (g2 == 1.0 ? static_cast<double>(n) : (1.0 - std::pow(g2, static_cast<double>(n))) / (1.0 - g2));
    return m;
}

} // namespace

TEST_CASE("zero-temperature free decay matches the exponential within Euler error",
          "[kinetics]") {
    const auto ks = spectrum_from({0.3, 1.0, 2.5});
    const PotentialParams free_pot{0.0, 0.0};
    const double c = 1.0;

    double err_coarse = 0.0, err_fine = 0.0;
    for (double dt : {0.02, 0.01}) {
        KineticsConfig cfg;
        cfg.temperature = 0.0;
        cfg.dt = dt;
        cfg.steps = static_cast<std::size_t>(std::lround(2.0 / dt));
        cfg.ensemble = 1;
        cfg.initial_amplitude = c;
        cfg.tracked_modes = {0, 1, 2};
        cfg.threads = 1;
        const auto ens = integrate(ks, free_pot, cfg);
        double err = 0.0;
        for (std::size_t s = 0; s < 3; ++s) {
            const auto f = correlation_F(ens, s);
            for (std::size_t t = 0; t < f.size(); ++t) {
                const double exact = c * c * std::exp(-ks.lambdas[s] * f.times[t]);
                err = std::max(err, std::abs(f.values[t] - exact));
            }
        }
        (dt == 0.02 ? err_coarse : err_fine) = err;
    }
    CHECK(err_coarse < 0.03);
    // Richardson consistency: halving dt must roughly halve the bias.
    CHECK(err_fine < 0.65 * err_coarse);
}

TEST_CASE("OU oracle: mean and variance within 3 MC standard errors, bias shrinking",
          "[kinetics][ou]") {
    const double lambda = 0.8, h0 = 0.7, temperature = 0.4, c = 1.0;
    const double k = lambda + h0;
    const auto ks = spectrum_from({lambda});
    const PotentialParams pot{h0, 0.0};

    for (double dt : {0.02, 0.01}) {
        KineticsConfig cfg;
        cfg.temperature = temperature;
        cfg.dt = dt;
        cfg.steps = static_cast<std::size_t>(std::lround(6.0 / dt));
        cfg.ensemble = 2000;
        cfg.seed = 7;
        cfg.initial_amplitude = c;
        cfg.tracked_modes = {0};
        const auto ens = integrate(ks, pot, cfg);

        // Ensemble mean of q at the final time (F(t, 0) / c = <q> since the
        // noise is independent of q(0)).
        const auto f = correlation_F(ens, 0);
        const std::size_t last = f.size() - 1;
        const auto chain = ou_chain_moments(k, temperature, dt, cfg.steps);

        // Monte Carlo moments of q(t_final).
        double m1 = 0.0, m2 = 0.0;
        const std::size_t nt = ens.n_times();
        for (std::size_t r = 0; r < ens.n_realizations(); ++r) {
            const double v = ens.q_tracked[r * nt + last];
            m1 += v;
            m2 += v * v;
        }
        m1 /= static_cast<double>(cfg.ensemble);
        m2 /= static_cast<double>(cfg.ensemble);
        const double var_hat = m2 - m1 * m1;

        const double mean_exact_chain = c * chain.decay;
        const double se_mean = std::sqrt(chain.variance / static_cast<double>(cfg.ensemble));
        CHECK(std::abs(m1 - mean_exact_chain) < 3.0 * se_mean);
        // Var(variance estimator) ~ 2 var^2 / R for Gaussians.
        const double se_var =
            chain.variance * std::sqrt(2.0 / static_cast<double>(cfg.ensemble));
        CHECK(std::abs(var_hat - chain.variance) < 3.0 * se_var);

        // Deterministic part of the check: the chain moments converge to the
        // continuous OU formulas at rate O(dt).
        const double t_final = ens.times[last];
        const double mean_cont = c * std::exp(-k * t_final);
        const double var_cont =
            temperature / k * (1.0 - std::exp(-2.0 * k * t_final));
        CHECK(std::abs(mean_exact_chain - mean_cont) < 2.0 * k * k * t_final * dt);
        CHECK(std::abs(chain.variance - var_cont) < 2.0 * temperature * dt / 0.5);

        // F(t0, t0) equals the second moment at t0 and is nonnegative.
        CHECK(f.values[0] == Catch::Approx(c * c).margin(1e-12));
        const auto f_mid = correlation_F(ens, 0, last / 2);
        CHECK(f_mid.values[last / 2] >= 0.0);
    }
}

TEST_CASE("a(0) = c^2 and zero-temperature a(t) matches the mode sum", "[kinetics]") {
    const auto ks = spectrum_from({0.0, 0.5, 1.5, 3.0});
    const PotentialParams free_pot{0.0, 0.0};
    KineticsConfig cfg;
    cfg.temperature = 0.0;
    cfg.dt = 0.01;
    cfg.steps = 300;
    cfg.ensemble = 2;
    cfg.initial_amplitude = 0.7;
    const auto ens = integrate(ks, free_pot, cfg);
    const auto a = observable_a(ens);
    CHECK(a.values[0] == Catch::Approx(0.49).margin(1e-14));

    // c^2 * (1/N) sum exp(-2 lambda t) with the discrete-chain decay factor.
    for (std::size_t t : {std::size_t(50), std::size_t(300)}) {
        double expect = 0.0;
        for (double lam : ks.lambdas)
            expect += 0.49 * std::pow(1.0 - lam * cfg.dt, 2.0 * static_cast<double>(t));
        expect /= static_cast<double>(ks.size());
        CHECK(a.values[t] == Catch::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("K(0) = c^2 and zero-temperature K(t) equals the decaying mode sum",
          "[kinetics]") {
    const auto ks = spectrum_from({0.1, 0.9, 2.0});
    const PotentialParams free_pot{0.0, 0.0};
    KineticsConfig cfg;
    cfg.temperature = 0.0;
    cfg.dt = 0.005;
    cfg.steps = 400;
    cfg.ensemble = 1;
    cfg.initial_amplitude = 1.3;
    const auto ens = integrate(ks, free_pot, cfg);
    const auto k = correlation_K(ens);
    CHECK(k.values[0] == Catch::Approx(1.3 * 1.3).margin(1e-12));
    for (std::size_t t : {std::size_t(100), std::size_t(400)}) {
        double expect = 0.0;
        for (double lam : ks.lambdas)
            expect += 1.69 * std::pow(1.0 - lam * cfg.dt, static_cast<double>(t));
        expect /= static_cast<double>(ks.size());
        CHECK(k.values[t] == Catch::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("runaway noise trips the divergence flag without killing the run",
          "[kinetics][divergence]") {
    // T so large that a(t) blows straight through the Euler stability bound
    // of the stiffest mode.
    const auto ks = spectrum_from({0.5, 1.0, 2.0});
    const auto pot = PotentialParams::from_a0(1.0, 1.0);
    KineticsConfig cfg;
    cfg.temperature = 5e6;
    cfg.dt = 0.05;
    cfg.steps = 400;
    cfg.ensemble = 8;
    cfg.seed = 3;
    const auto ens = integrate(ks, pot, cfg);
    std::size_t blown = 0;
    for (std::size_t r = 0; r < ens.n_realizations(); ++r)
        if (ens.diverged[r]) {
            ++blown;
            CHECK(ens.divergence_step[r] <= cfg.steps);
            CHECK(std::isnan(ens.a_r[r * ens.n_times() + cfg.steps]));
        }
    CHECK(blown == 8);
    CHECK_THROWS_AS(observable_a(ens), ComputeError);
    CHECK_THROWS_AS(correlation_K(ens), ComputeError);
}

TEST_CASE("stability guard rejects oversized steps", "[kinetics]") {
    const auto ks = spectrum_from({10.0});
    const auto pot = PotentialParams::from_a0(2.0, 1.0);
    KineticsConfig cfg;
    cfg.dt = 0.2;  // dt * (10 + 2 + 8) = 4 > 0.5
    cfg.steps = 10;
    CHECK_THROWS_AS(integrate(ks, pot, cfg), ConfigError);
}

TEST_CASE("identical configs give bitwise identical observables", "[kinetics][property]") {
    const auto ks = spectrum_from({0.0, 0.4, 1.1, 2.2});
    const auto pot = PotentialParams::from_a0(2.0, 1.0);
    KineticsConfig cfg;
    cfg.temperature = 0.3;
    cfg.steps = 200;
    cfg.ensemble = 16;
    cfg.seed = 42;
    cfg.tracked_modes = {0, 2};

    KineticsConfig cfg_threads = cfg;
    cfg_threads.threads = 2;
    KineticsConfig cfg_single = cfg;
    cfg_single.threads = 1;

    const auto e1 = integrate(ks, pot, cfg_threads);
    const auto e2 = integrate(ks, pot, cfg_single);
    CHECK(observable_a(e1).values == observable_a(e2).values);
    CHECK(correlation_K(e1).values == correlation_K(e2).values);
    CHECK(correlation_F(e1, 2).values == correlation_F(e2, 2).values);
}

TEST_CASE("self-averaging at low T and confinement ordering in T", "[kinetics][slow]") {
    // MP-sampled kinetic spectrum, N_c = 400; a0 = 2.
    const auto ks = mp_kinetic_spectrum({1.0, 0.5}, 400, 20.0);
    const auto pot = PotentialParams::from_a0(2.0, 1.0);
    const double a0 = 2.0;

    // Discrete critical temperature: T_c = a0 / (2 Hbar(0)).
    double hbar0 = 0.0;
    std::size_t used = 0;
    for (double lam : ks.lambdas)
        if (lam > 1e-9) {
            hbar0 += 1.0 / (2.0 * lam);
            ++used;
        }
    hbar0 /= static_cast<double>(used);
    const double t_c = a0 / (2.0 * hbar0);

    double plateaus[3];
    const double ratios[3] = {0.1, 1.0, 10.0};
    for (int k = 0; k < 3; ++k) {
        KineticsConfig cfg;
        cfg.temperature = ratios[k] * t_c;
        cfg.steps = 4000;
        cfg.ensemble = 5;
        cfg.seed = 100 + static_cast<std::uint64_t>(k);
        const auto ens = integrate(ks, pot, cfg);
        const auto a = observable_a(ens);
        // Average the last quarter as the plateau estimate.
        double plateau = 0.0;
        const std::size_t from = 3 * a.size() / 4;
        for (std::size_t t = from; t < a.size(); ++t) plateau += a.values[t];
        plateaus[k] = plateau / static_cast<double>(a.size() - from);

        if (k == 0) {
            // Quenched hypothesis: the five realizations agree within 10% of a0.
            double lo = 1e300, hi = -1e300;
            const std::size_t last = ens.n_times() - 1;
            for (std::size_t r = 0; r < ens.n_realizations(); ++r) {
                const double v = ens.a_r[r * ens.n_times() + last];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            CHECK((hi - lo) < 0.1 * a0);
            CHECK(plateaus[0] == Catch::Approx(a0).epsilon(0.05));
        }
    }
    CHECK(plateaus[2] > a0);              // high T sits above the minimum
    CHECK(plateaus[0] <= plateaus[1] * 1.02);
    CHECK(plateaus[1] <= plateaus[2] * 1.02);  // nondecreasing in T
}
