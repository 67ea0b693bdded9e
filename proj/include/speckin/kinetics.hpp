// Ensemble Euler-Maruyama integrator for the mode-space Langevin equation
//
//     dq_mu = -(lambda_mu + h0 + h1 * a_r(t)) q_mu dt + sqrt(2 T dt) xi,
//
// where a_r(t) = (1/N_c) sum_mu q_mu^2 is computed per realization from the
// current state. Produces the order parameter a(t), mode correlations
// F_mu(t, t0), and the spectral average K(t). Realizations own independent
// counter-based noise streams, so they can run on any thread layout and the
// ensemble output stays bit-identical; all reductions run in fixed
// realization order.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "speckin/errors.hpp"
#include "speckin/parallel.hpp"
#include "speckin/rmt.hpp"
#include "speckin/rng.hpp"
#include "speckin/series.hpp"

namespace speckin {

// Quartic confining potential truncated at n_max = 1: l(t) = h0 + h1 a(t).
// The minimum a0 = -h0/h1 exists for h1 > 0, h0 < 0.
struct PotentialParams {
    double h0 = 0.0;
    double h1 = 0.0;

    static PotentialParams from_a0(double a0, double h1 = 1.0) {
        if (!(a0 > 0.0) || !(h1 > 0.0))
            throw std::invalid_argument("PotentialParams: a0 and h1 must be > 0");
        return {-a0 * h1, h1};
    }

    bool confining() const { return h1 > 0.0; }

    double a0() const {
        if (!(h1 > 0.0))
            throw std::invalid_argument("PotentialParams: a0 undefined for h1 <= 0");
        return -h0 / h1;
    }

    void validate() const {
        if (h1 < 0.0) throw std::invalid_argument("PotentialParams: h1 must be >= 0");
    }
};

struct KineticsConfig {
    double temperature = 0.0;     // noise strength T >= 0
    double dt = 0.0;              // 0 requests the automatic step size
    std::size_t steps = 1000;
    std::size_t ensemble = 100;   // R noise realizations
    std::uint64_t seed = 0;
    double initial_amplitude = 1.0;  // c, so a(0) = c^2
    std::vector<std::size_t> tracked_modes;  // modes with stored trajectories
    unsigned threads = 0;         // 0 = hardware concurrency

    static double auto_dt(const KineticSpectrum& spectrum, const PotentialParams& pot,
                          double c) {
        const double a_scale = pot.confining() ? std::max(pot.a0(), c * c) : c * c;
        return 0.1 / (spectrum.lambda_max() + std::abs(pot.h0) + pot.h1 * a_scale);
    }
};

struct TrajectoryEnsemble {
    KineticSpectrum spectrum;
    PotentialParams potential;
    KineticsConfig config;
    std::vector<double> times;           // steps+1 uniform points
    std::vector<double> a_r;             // R x (steps+1); NaN past a divergence
    std::vector<double> k_r;             // R x (steps+1); same layout
    std::vector<std::size_t> tracked_modes;
    std::vector<double> q_tracked;       // R x M x (steps+1)
    std::vector<std::uint8_t> diverged;  // per realization
    std::vector<std::size_t> divergence_step;

    std::size_t n_times() const { return times.size(); }
    std::size_t n_realizations() const { return diverged.size(); }

    std::size_t surviving() const {
        std::size_t k = 0;
        for (auto d : diverged)
            if (!d) ++k;
        return k;
    }

    double tracked_value(std::size_t r, std::size_t tracked_slot, std::size_t t) const {
        const std::size_t m = tracked_modes.size();
        return q_tracked[(r * m + tracked_slot) * n_times() + t];
    }

    std::size_t tracked_slot(std::size_t mu) const {
        for (std::size_t s = 0; s < tracked_modes.size(); ++s)
            if (tracked_modes[s] == mu) return s;
        throw std::invalid_argument("TrajectoryEnsemble: mode " + std::to_string(mu) +
                                    " was not tracked");
    }
};

inline TrajectoryEnsemble integrate(const KineticSpectrum& spectrum,
                                    const PotentialParams& pot,
                                    const KineticsConfig& cfg) {
    pot.validate();
    if (spectrum.size() < 1) throw std::invalid_argument("integrate: empty spectrum");
    if (cfg.temperature < 0.0) throw std::invalid_argument("integrate: T must be >= 0");
    if (cfg.ensemble < 1 || cfg.steps < 1)
        throw std::invalid_argument("integrate: need >= 1 realizations and steps");
    const double c = cfg.initial_amplitude;

    double dt = cfg.dt > 0.0 ? cfg.dt : KineticsConfig::auto_dt(spectrum, pot, c);
    // Stability guard: the stiffest mode must stay well inside the Euler
    // stability region even if a(t) overshoots to a_cap.
    const double a_cap = pot.confining() ? std::max(4.0 * pot.a0(), 4.0 * c * c)
                                         : 4.0 * c * c;
    const double stiffness = spectrum.lambda_max() + std::abs(pot.h0) + pot.h1 * a_cap;
    if (!(dt * stiffness < 0.5))
        throw ConfigError("integrate: dt * (lambda_max + |h0| + h1 a_cap) = " +
                          std::to_string(dt * stiffness) + " violates the < 0.5 guard");

    const std::size_t n_modes = spectrum.size();
    const std::size_t n_times = cfg.steps + 1;
    const std::size_t r_total = cfg.ensemble;

    std::vector<std::size_t> tracked = cfg.tracked_modes;
    for (std::size_t mu : tracked)
        if (mu >= n_modes)
            throw std::invalid_argument("integrate: tracked mode " + std::to_string(mu) +
                                        " out of range");
    const std::size_t m = tracked.size();

    const double budget_bytes = 2.5e9;
    const double need = 8.0 * static_cast<double>(r_total) * static_cast<double>(n_times) *
                        (2.0 + static_cast<double>(m));
    if (need > budget_bytes)
        throw ConfigError("integrate: requested storage " + std::to_string(need / 1e9) +
                          " GB exceeds the 2.5 GB budget; track fewer modes or steps");

    TrajectoryEnsemble ens;
    ens.spectrum = spectrum;
    ens.potential = pot;
    ens.config = cfg;
    ens.config.dt = dt;
    ens.times.resize(n_times);
    for (std::size_t t = 0; t < n_times; ++t)
        ens.times[t] = static_cast<double>(t) * dt;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    ens.a_r.assign(r_total * n_times, nan);
    ens.k_r.assign(r_total * n_times, nan);
    ens.tracked_modes = tracked;
    ens.q_tracked.assign(r_total * m * n_times, nan);
    ens.diverged.assign(r_total, 0);
    ens.divergence_step.assign(r_total, n_times);

    const double noise_scale = std::sqrt(2.0 * cfg.temperature * dt);
    double blow_up = 1e6 * std::max(std::abs(c), pot.confining() && pot.a0() > 0.0
                                                        ? std::sqrt(pot.a0())
                                                        : 0.0);
    if (!(blow_up > 0.0)) blow_up = 1e6;  // c = 0 free field: absolute scale
    const double inv_n = 1.0 / static_cast<double>(n_modes);
    const unsigned threads = cfg.threads ? cfg.threads : default_thread_count();

    parallel_for(r_total, threads, [&](std::size_t r_begin, std::size_t r_end) {
        std::vector<double> q(n_modes);
        for (std::size_t r = r_begin; r < r_end; ++r) {
            NormalStream noise(cfg.seed, rng_purpose::stream(rng_purpose::kKinetics, r));
            std::fill(q.begin(), q.end(), c);
            double a_cur = 0.0;
            for (double v : q) a_cur += v * v;
            a_cur *= inv_n;

            auto record = [&](std::size_t t) {
                ens.a_r[r * n_times + t] = a_cur;
                double ksum = 0.0;
                for (double v : q) ksum += v;
                ens.k_r[r * n_times + t] = c * ksum * inv_n;
                for (std::size_t s = 0; s < m; ++s)
                    ens.q_tracked[(r * m + s) * n_times + t] = q[tracked[s]];
            };
            record(0);

            for (std::size_t step = 1; step < n_times; ++step) {
                const double ell = pot.h0 + pot.h1 * a_cur;
                bool blew = false;
                double a_next = 0.0;
                for (std::size_t mu = 0; mu < n_modes; ++mu) {
                    double v = q[mu];
                    v -= (spectrum.lambdas[mu] + ell) * v * dt;
                    if (noise_scale > 0.0) v += noise_scale * noise.next();
                    q[mu] = v;
                    a_next += v * v;
                    if (std::abs(v) > blow_up) blew = true;
                }
                a_cur = a_next * inv_n;
                if (blew || !std::isfinite(a_cur)) {
                    ens.diverged[r] = 1;
                    ens.divergence_step[r] = step;
                    break;  // data past the divergence stays NaN
                }
                record(step);
            }
        }
    });
    return ens;
}

namespace detail {

// Fixed-order mean over surviving realizations of one stored R x (steps+1)
// block; the reduction order is independent of the thread layout above.
inline ObservableSeries reduce_mean(const TrajectoryEnsemble& ens,
                                    const std::vector<double>& block,
                                    const std::string& label) {
    const std::size_t nt = ens.n_times();
    const std::size_t survivors = ens.surviving();
    if (survivors == 0)
        throw ComputeError(label + ": every realization diverged");
    ObservableSeries s;
    s.label = label;
    s.times = ens.times;
    s.realization_count = survivors;
    s.values.assign(nt, 0.0);
    for (std::size_t r = 0; r < ens.n_realizations(); ++r) {
        if (ens.diverged[r]) continue;
        for (std::size_t t = 0; t < nt; ++t) s.values[t] += block[r * nt + t];
    }
    const double inv = 1.0 / static_cast<double>(survivors);
    for (double& v : s.values) v *= inv;
    return s;
}

} // namespace detail

// Ensemble mean of a_r(t) over surviving realizations.
inline ObservableSeries observable_a(const TrajectoryEnsemble& ens) {
    return detail::reduce_mean(ens, ens.a_r, "a");
}

// F_mu(t, t0) = < q_mu(t) q_mu(t0) >; mu must be a tracked mode.
inline ObservableSeries correlation_F(const TrajectoryEnsemble& ens, std::size_t mu,
                                      std::size_t t0 = 0) {
    if (t0 >= ens.n_times()) throw std::invalid_argument("correlation_F: t0 out of range");
    const std::size_t slot = ens.tracked_slot(mu);
    const std::size_t nt = ens.n_times();
    const std::size_t survivors = ens.surviving();
    if (survivors == 0) throw ComputeError("correlation_F: every realization diverged");
    ObservableSeries s;
    s.label = "F_mu";
    s.times = ens.times;
    s.realization_count = survivors;
    s.values.assign(nt, 0.0);
    for (std::size_t r = 0; r < ens.n_realizations(); ++r) {
        if (ens.diverged[r]) continue;
        const double at_t0 = ens.tracked_value(r, slot, t0);
        for (std::size_t t = 0; t < nt; ++t)
            s.values[t] += ens.tracked_value(r, slot, t) * at_t0;
    }
    const double inv = 1.0 / static_cast<double>(survivors);
    for (double& v : s.values) v *= inv;
    return s;
}

// K(t) = (1/N_c) sum_mu F_mu(t, 0), accumulated inside the integrator.
inline ObservableSeries correlation_K(const TrajectoryEnsemble& ens) {
    return detail::reduce_mean(ens, ens.k_r, "K");
}

} // namespace speckin
