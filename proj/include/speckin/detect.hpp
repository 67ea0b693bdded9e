// Signal detection on mode correlations: exponent fits F ~ A e^{-alpha t}/t^gamma,
// the short-time concavity (second derivative) criterion, and the beta-sweep
// driver that runs panel -> spectrum -> kinetics -> verdicts over a grid.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "speckin/analytics.hpp"
#include "speckin/errors.hpp"
#include "speckin/kinetics.hpp"
#include "speckin/market.hpp"
#include "speckin/rmt.hpp"
#include "speckin/series.hpp"
#include "speckin/stats.hpp"

namespace speckin {

struct ExponentFit {
    double alpha = 0.0;      // decay rate; ~0 for pure power laws
    double gamma = 0.0;      // power-law exponent
    double amplitude = 0.0;
    double r2 = 0.0;         // goodness of the log-space fit
    double t_lo = 0.0;
    double t_hi = 0.0;
    double condition = 0.0;  // condition number of the (1, -t, -log t) design
};

// Default fit window: clear of the initial transient (5 dt) and of the Monte
// Carlo noise floor (first time F drops below 3/sqrt(R) of its initial value).
inline std::pair<double, double> default_fit_window(const ObservableSeries& f) {
    const double dt = f.size() > 1 ? f.times[1] - f.times[0] : 0.0;
    const double t_lo = 5.0 * dt;
    double t_hi = f.times.empty() ? 0.0 : f.times.back();
    if (f.realization_count > 0 && !f.values.empty()) {
        const double floor_level =
            3.0 / std::sqrt(static_cast<double>(f.realization_count)) * f.values[0];
        for (std::size_t k = 0; k < f.size(); ++k)
            if (f.values[k] < floor_level) {
                t_hi = f.times[k];
                break;
            }
    }
    return {t_lo, t_hi};
}

// Linear least squares of log F on (1, -t, -log t) over the window. Returns
// nullopt when fewer than 16 positive samples are available (noise floor):
// the inconclusive marker, not an error.
inline std::optional<ExponentFit> fit_alpha_gamma(const ObservableSeries& f,
                                                  std::pair<double, double> window) {
    if (!(window.first > 0.0))
        throw std::invalid_argument("fit_alpha_gamma: window must start at t > 0");
    std::vector<double> ts, ys;
    for (std::size_t k = 0; k < f.size(); ++k) {
        const double t = f.times[k];
        if (t < window.first || t > window.second) continue;
        if (!(f.values[k] > 0.0)) continue;
        ts.push_back(t);
        ys.push_back(std::log(f.values[k]));
    }
    if (ts.size() < 16) return std::nullopt;

    // Normal equations for x = (log A, alpha, gamma), design (1, -t, -log t).
    double g[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double b[3] = {0, 0, 0};
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const double row[3] = {1.0, -ts[k], -std::log(ts[k])};
        for (int i = 0; i < 3; ++i) {
            b[i] += row[i] * ys[k];
            for (int j = 0; j < 3; ++j) g[i][j] += row[i] * row[j];
        }
    }
    // Condition number of the design from the Gram spectrum.
    {
        SymmetricMatrix gm(3);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j <= i; ++j) gm.set(i, j, g[i][j]);
        const auto d = eigh(gm);
        const double lo = std::max(d.eigenvalues.back(), 1e-300);
        ExponentFit fit;
        fit.condition = std::sqrt(d.eigenvalues.front() / lo);
        // Solve the 3x3 system by Gaussian elimination with partial pivoting.
        double m[3][4];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) m[i][j] = g[i][j];
            m[i][3] = b[i];
        }
        for (int col = 0; col < 3; ++col) {
            int piv = col;
            for (int r = col + 1; r < 3; ++r)
                if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
            std::swap(m[col], m[piv]);
            if (m[col][col] == 0.0) return std::nullopt;  // degenerate design
            for (int r = 0; r < 3; ++r) {
                if (r == col) continue;
                const double fr = m[r][col] / m[col][col];
                for (int cc = col; cc < 4; ++cc) m[r][cc] -= fr * m[col][cc];
            }
        }
        fit.amplitude = std::exp(m[0][3] / m[0][0]);
        fit.alpha = m[1][3] / m[1][1];
        fit.gamma = m[2][3] / m[2][2];
        fit.t_lo = window.first;
        fit.t_hi = window.second;

        double ss_res = 0.0, ss_tot = 0.0;
        const double y_mean = mean(ys);
        for (std::size_t k = 0; k < ts.size(); ++k) {
            const double pred = std::log(fit.amplitude) - fit.alpha * ts[k] -
                                fit.gamma * std::log(ts[k]);
            ss_res += (ys[k] - pred) * (ys[k] - pred);
            ss_tot += (ys[k] - y_mean) * (ys[k] - y_mean);
        }
        fit.r2 = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
        return fit;
    }
}

// Maximum (signed) central second difference over the window, after a
// centered moving average of `smooth_width` samples. smooth_width = 1 means
// no smoothing; quadratics come back with their exact second derivative.
inline double second_derivative_max(const ObservableSeries& f, std::size_t smooth_width,
                                    std::pair<double, double> window) {
    if (f.size() < 5) throw std::invalid_argument("second_derivative_max: series too short");
    if (smooth_width % 2 == 0 || smooth_width == 0)
        throw std::invalid_argument("second_derivative_max: smooth_width must be odd");
    const double dt = f.times[1] - f.times[0];
    for (std::size_t k = 2; k < f.size(); ++k)
        if (std::abs((f.times[k] - f.times[k - 1]) - dt) > 1e-9 * std::max(1.0, dt))
            throw std::invalid_argument("second_derivative_max: grid not uniform");

    std::vector<double> smooth(f.size());
    const std::size_t half = smooth_width / 2;
    for (std::size_t k = 0; k < f.size(); ++k) {
        const std::size_t lo = k >= half ? k - half : 0;
        const std::size_t hi = std::min(f.size() - 1, k + half);
        double acc = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) acc += f.values[j];
        smooth[k] = acc / static_cast<double>(hi - lo + 1);
    }

    double best = -1e300;
    std::size_t in_window = 0;
    for (std::size_t k = 1; k + 1 < f.size(); ++k) {
        if (f.times[k] < window.first || f.times[k] > window.second) continue;
        ++in_window;
        const double dd = (smooth[k - 1] - 2.0 * smooth[k] + smooth[k + 1]) / (dt * dt);
        best = std::max(best, dd);
    }
    if (in_window < 3)
        throw std::invalid_argument("second_derivative_max: window outside the grid");
    return best;
}

enum class Verdict { signal, no_signal, inconclusive };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::signal: return "signal";
        case Verdict::no_signal: return "no_signal";
        default: return "inconclusive";
    }
}

struct ModeResult {
    std::size_t mode = 0;
    std::optional<ExponentFit> fit;
    double second_derivative = 0.0;
    Verdict verdict = Verdict::inconclusive;
};

struct DetectionReport {
    double beta = 0.0;
    double temperature_ratio = 0.0;
    double critical_temperature = 0.0;
    std::vector<ModeResult> per_mode;
};

struct ModeSeries {
    std::size_t mode = 0;
    ObservableSeries f;  // F_mu(t, 0)
};

struct DetectOptions {
    double threshold = 1.0;          // paper's "second derivative greater than 1"
    std::size_t smooth_width = 5;
    double sd_window_fraction = 0.25;  // short-time window = leading fraction
    std::optional<std::pair<double, double>> fit_window;  // default rule if unset
};

// Verdict per mode: signal iff the smoothed short-time second derivative of
// F/F(0) exceeds the threshold; inconclusive when the exponent fit cannot be
// made (noise floor or degenerate series).
inline DetectionReport detect_signal(const std::vector<ModeSeries>& modes,
                                     const DetectOptions& opts = {}) {
    DetectionReport report;
    for (const auto& ms : modes) {
        ModeResult res;
        res.mode = ms.mode;
        const auto& f = ms.f;
        if (f.size() < 5 || !(f.values[0] != 0.0)) {
            report.per_mode.push_back(res);  // inconclusive
            continue;
        }
        // Normalize by F(0) = c^2; the threshold is defined on this scale.
        ObservableSeries norm = f;
        const double inv0 = 1.0 / f.values[0];
        for (double& v : norm.values) v *= inv0;

        const auto window = opts.fit_window ? *opts.fit_window : default_fit_window(norm);
        res.fit = fit_alpha_gamma(norm, window);
        const double t_end = norm.times.back();
        res.second_derivative = second_derivative_max(
            norm, opts.smooth_width, {0.0, opts.sd_window_fraction * t_end});
        if (!res.fit) {
            res.verdict = Verdict::inconclusive;
        } else {
            res.verdict = res.second_derivative > opts.threshold ? Verdict::signal
                                                                 : Verdict::no_signal;
        }
        report.per_mode.push_back(res);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Beta sweep: the full pipeline per (beta, T/T_c) cell. Cell seeds derive
// deterministically from the master seed, so the report list is a pure
// function of (panel, grid, seed).
// ---------------------------------------------------------------------------
struct SweepOptions {
    SpectrumOptions spectrum;
    DetectOptions detect;
    PotentialParams potential = PotentialParams::from_a0(2.0, 1.0);
};

inline std::vector<DetectionReport> beta_sweep(const PricePanel& panel,
                                               const std::vector<double>& betas,
                                               const std::vector<std::size_t>& modes,
                                               const std::vector<double>& temperature_ratios,
                                               const KineticsConfig& base_cfg,
                                               const SweepOptions& opts = {}) {
    if (betas.empty() || modes.empty() || temperature_ratios.empty())
        throw std::invalid_argument("beta_sweep: empty parameter grid");
    for (double b : betas)
        if (!(b >= -1.0 && b <= 1.0))
            throw std::invalid_argument("beta_sweep: beta outside [-1, 1]");

    std::vector<DetectionReport> reports;
    for (std::size_t bi = 0; bi < betas.size(); ++bi) {
        const double beta = betas[bi];
        const std::uint64_t cell_seed = derive_seed(base_cfg.seed, bi);
        try {
            const auto sim_panel = build_beta_panel(panel, beta, cell_seed);
            SpectrumOptions sopt = opts.spectrum;
            if (!sopt.q_fixed)
                sopt.q_fixed = static_cast<double>(sim_panel.assets()) /
                               static_cast<double>(sim_panel.days() - 1);
            const auto analysis =
                analyze_correlation_spectrum(correlation_matrix(log_returns(sim_panel)), sopt);

            const auto rho = SpectralDensity::from_kinetic(analysis.kinetic);
            const double t_c =
                critical_temperature(opts.potential.a0(), rho).value;

            std::vector<std::size_t> tracked;
            for (std::size_t mu : modes)
                if (mu < analysis.kinetic.size()) tracked.push_back(mu);
            if (tracked.empty())
                throw ConfigError("no requested mode exists in the bulk (N_c = " +
                                  std::to_string(analysis.kinetic.size()) + ")");

            for (double ratio : temperature_ratios) {
                KineticsConfig cfg = base_cfg;
                cfg.seed = derive_seed(cell_seed, 1000 + static_cast<std::uint64_t>(
                                                             ratio * 1e6));
                cfg.temperature = ratio * t_c;
                cfg.tracked_modes = tracked;
                const auto ens = integrate(analysis.kinetic, opts.potential, cfg);

                std::vector<ModeSeries> series;
                for (std::size_t mu : modes) {
                    ModeSeries ms;
                    ms.mode = mu;
                    if (std::find(tracked.begin(), tracked.end(), mu) != tracked.end())
                        ms.f = correlation_F(ens, mu);
                    series.push_back(std::move(ms));
                }
                auto report = detect_signal(series, opts.detect);
                report.beta = beta;
                report.temperature_ratio = ratio;
                report.critical_temperature = t_c;
                reports.push_back(std::move(report));
            }
        } catch (const std::exception& e) {
            throw ComputeError("beta_sweep cell (beta = " + std::to_string(beta) +
                               "): " + e.what());
        }
    }
    return reports;
}

} // namespace speckin
