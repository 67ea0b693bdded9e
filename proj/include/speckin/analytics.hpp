// Closed-form quenched theory: the memory kernel H(t) (discrete spectra and
// the exact MP form at q = 1), its Laplace transform, the critical
// temperature, the Laplace-domain propagator Gbar(p), the time-domain
// Volterra equation G = H/a0 + (2T/a0) H*G solved by trapezoidal product
// integration, the algebraic a(t) reconstruction, and power-law tail fits.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "speckin/errors.hpp"
#include "speckin/rmt.hpp"
#include "speckin/series.hpp"
#include "speckin/stats.hpp"

namespace speckin {

// Spectral density of kinetic rates: either an explicit discrete list with
// uniform weights, or the closed-form MP kernel at aspect ratio 1 and
// variance sigma^2.
struct SpectralDensity {
    enum class Kind { discrete, mp_closed };

    Kind kind = Kind::discrete;
    std::vector<double> lambdas;  // discrete only
    double sigma = 1.0;           // mp_closed only
    double epsilon = 0.0;         // rate floor for the discrete Hbar(0) sum

    static SpectralDensity discrete(std::vector<double> lams, double eps = 0.0) {
        if (lams.empty())
            throw std::invalid_argument("SpectralDensity: empty rate list");
        for (double l : lams)
            if (!(l >= 0.0) || !std::isfinite(l))
                throw std::invalid_argument("SpectralDensity: rates must be finite and >= 0");
        SpectralDensity d;
        d.kind = Kind::discrete;
        d.lambdas = std::move(lams);
        d.epsilon = eps;
        return d;
    }

    // The edge mode of a mapped bulk sits exactly at lambda = 0; the open
    // interval meets the finite sample there, so Hbar(0) excludes rates below
    // eps = 1 / (N_c (x_+ - x_-)).
    static SpectralDensity from_kinetic(const KineticSpectrum& ks) {
        SpectralDensity d = discrete(ks.lambdas);
        if (ks.edge_span > 0.0)
            d.epsilon = 1.0 / (static_cast<double>(ks.size()) * ks.edge_span);
        return d;
    }

    static SpectralDensity mp_closed(double sigma) {
        if (!(sigma > 0.0))
            throw std::invalid_argument("SpectralDensity: sigma must be > 0");
        SpectralDensity d;
        d.kind = Kind::mp_closed;
        d.sigma = sigma;
        return d;
    }
};

// H(t): (1/N_c) sum exp(-2 lambda t) for discrete spectra. For the MP closed
// form at q = 1,
//     H(t) = [sqrt(2/(pi t)) sigma - e^{t/(2 sigma^2)} erfc(sqrt(t)/(sqrt2 sigma))] / (4 sigma^3),
// which diverges like t^{-1/2} at the origin (t = 0 is a domain error). For
// large t the bracket is the difference of two nearly equal quantities; with
// x = sqrt(t) / (sqrt2 sigma) it equals 1/(x sqrt(pi)) - erfcx(x), evaluated
// cancellation-free by erfcx_deficit.
inline double h_of_t(const SpectralDensity& rho, double t) {
    if (rho.kind == SpectralDensity::Kind::discrete) {
        if (t < 0.0) throw std::invalid_argument("h_of_t: t must be >= 0");
        double s = 0.0;
        for (double lam : rho.lambdas) s += std::exp(-2.0 * lam * t);
        return s / static_cast<double>(rho.lambdas.size());
    }
    if (!(t > 0.0))
        throw std::invalid_argument("h_of_t: mp_closed kernel diverges at t = 0");
    const double x = std::sqrt(t) / (std::sqrt(2.0) * rho.sigma);
    return erfcx_deficit(x) / (4.0 * rho.sigma * rho.sigma * rho.sigma);
}

// Laplace transform of the MP closed-form H: Hbar(p) = 1/(2 sqrt2 sqrt(p) sigma^2 + 2 sigma).
inline double h_bar_mp(double p, double sigma) {
    if (p < 0.0) throw std::invalid_argument("h_bar_mp: p must be >= 0");
    if (!(sigma > 0.0)) throw std::invalid_argument("h_bar_mp: sigma must be > 0");
    return 1.0 / (2.0 * std::sqrt(2.0) * std::sqrt(p) * sigma * sigma + 2.0 * sigma);
}

// Hbar(p) for either density; discrete: (1/N_c) sum 1/(p + 2 lambda).
// `rate_floor` excludes rates below it (used only by the p = 0 evaluation).
inline double h_bar(const SpectralDensity& rho, double p, double rate_floor = 0.0,
                    std::size_t* excluded = nullptr) {
    if (rho.kind == SpectralDensity::Kind::mp_closed) {
        if (excluded) *excluded = 0;
        return h_bar_mp(p, rho.sigma);
    }
    double s = 0.0;
    std::size_t used = 0, skipped = 0;
    for (double lam : rho.lambdas) {
        if (lam < rate_floor) {
            ++skipped;
            continue;
        }
        const double den = p + 2.0 * lam;
        if (!(den > 0.0)) throw ComputeError("h_bar: divergent mode at p = 0");
        s += 1.0 / den;
        ++used;
    }
    if (excluded) *excluded = skipped;
    if (used == 0) throw ComputeError("h_bar: no modes above the rate floor");
    return s / static_cast<double>(rho.lambdas.size());
}

struct TcEstimate {
    double value = 0.0;
    std::size_t excluded_modes = 0;  // rates below epsilon dropped from Hbar(0)
};

// T_c = a0 / (2 Hbar(0)). For the MP closed form Hbar(0) = 1/(2 sigma), so
// T_c = a0 sigma.
inline TcEstimate critical_temperature(double a0, const SpectralDensity& rho) {
    if (!(a0 > 0.0)) throw std::invalid_argument("critical_temperature: a0 must be > 0");
    TcEstimate tc;
    if (rho.kind == SpectralDensity::Kind::mp_closed) {
        tc.value = a0 / (2.0 * h_bar_mp(0.0, rho.sigma));
        return tc;
    }
    const double hbar0 = h_bar(rho, 0.0, std::max(rho.epsilon, 0.0), &tc.excluded_modes);
    // Note: h_bar normalizes by the full mode count, excluded modes included;
    // the exclusion only removes their (divergent) 1/(2 lambda) contribution.
    tc.value = a0 / (2.0 * hbar0);
    return tc;
}

// Gbar(p) = (1/2) / ((a0 / 2) / Hbar(p) - T); positive only below T_c.
inline double g_bar(double p, double a0, double temperature, const SpectralDensity& rho) {
    if (!(p > 0.0) && rho.kind == SpectralDensity::Kind::discrete) {
        bool has_zero_mode = false;
        for (double lam : rho.lambdas)
            if (lam == 0.0) has_zero_mode = true;
        if (has_zero_mode) throw std::invalid_argument("g_bar: p must be > 0 with a zero mode");
    }
    if (p < 0.0) throw std::invalid_argument("g_bar: p must be >= 0");
    if (temperature < 0.0) throw std::invalid_argument("g_bar: T must be >= 0");
    const double hb = h_bar(rho, p);
    const double denom = 0.5 * a0 / hb - temperature;
    if (!(denom > 0.0))
        throw ComputeError("g_bar: temperature at or above the critical value for p = " +
                           std::to_string(p));
    return 0.5 / denom;
}

struct TimeGrid {
    double dt = 0.0;
    std::size_t steps = 0;  // nodes are t_k = k dt, k = 0..steps

    std::vector<double> times() const {
        std::vector<double> ts(steps + 1);
        for (std::size_t k = 0; k <= steps; ++k) ts[k] = static_cast<double>(k) * dt;
        return ts;
    }

    void validate() const {
        if (!(dt > 0.0) || steps < 1) throw std::invalid_argument("TimeGrid: invalid grid");
    }
};

inline ObservableSeries h_series(const SpectralDensity& rho, const TimeGrid& grid) {
    grid.validate();
    ObservableSeries s;
    s.label = "H";
    s.times = grid.times();
    s.values.reserve(s.times.size());
    for (double t : s.times) s.values.push_back(h_of_t(rho, t));
    s.realization_count = 1;
    return s;
}

// Volterra equation of the second kind G(t) = H(t)/a0 + (2T/a0) int_0^t
// H(t-s) G(s) ds, marched with trapezoidal product integration. The diagonal
// term is implicit: at node n the unknown G_n enters the quadrature with
// weight (T dt / a0) H_0, so each step solves
//   G_n [1 - T dt H_0 / a0] = H_n/a0 + (2T/a0) dt [H_n G_0 / 2 + sum_{0<j<n} H_{n-j} G_j].
// G_0 = H_0 / a0 exactly (the integral term is empty at t = 0), which keeps
// the a_closed identity exact at the first node as well.
inline ObservableSeries solve_g_volterra(double a0, double temperature,
                                         const SpectralDensity& rho, const TimeGrid& grid) {
    if (rho.kind != SpectralDensity::Kind::discrete)
        throw std::invalid_argument("solve_g_volterra: discrete spectral density required");
    if (!(a0 > 0.0)) throw std::invalid_argument("solve_g_volterra: a0 must be > 0");
    if (temperature < 0.0) throw std::invalid_argument("solve_g_volterra: T must be >= 0");
    grid.validate();
    const double lam_max = *std::max_element(rho.lambdas.begin(), rho.lambdas.end());
    if (!(grid.dt * 2.0 * lam_max < 0.5))
        throw std::invalid_argument("solve_g_volterra: dt * 2 lambda_max must be < 0.5");

    const auto h = h_series(rho, grid);
    const std::size_t n_nodes = h.size();
    const double dt = grid.dt;
    const double implicit = 1.0 - temperature * dt * h.values[0] / a0;
    if (!(implicit > 0.0))
        throw ComputeError("solve_g_volterra: implicit step denominator <= 0; reduce dt");

    ObservableSeries g;
    g.label = "G";
    g.times = h.times;
    g.realization_count = 1;
    g.values.assign(n_nodes, 0.0);
    g.values[0] = h.values[0] / a0;
    const double coupling = 2.0 * temperature / a0;
    for (std::size_t n = 1; n < n_nodes; ++n) {
        double conv = 0.5 * h.values[n] * g.values[0];
        for (std::size_t j = 1; j < n; ++j) conv += h.values[n - j] * g.values[j];
        g.values[n] = (h.values[n] / a0 + coupling * dt * conv) / implicit;
    }
    return g;
}

// F(t) = int_0^t H(t-s) G(s) ds with the same trapezoid rule as the solver,
// so that a_closed applied to (G, H, F) closes algebraically on the grid.
inline ObservableSeries convolve_trapezoid(const ObservableSeries& h,
                                           const ObservableSeries& g) {
    if (h.times.size() != g.times.size() || h.times.size() < 2)
        throw std::invalid_argument("convolve_trapezoid: mismatched grids");
    const double dt = h.times[1] - h.times[0];
    ObservableSeries f;
    f.label = "F";
    f.times = h.times;
    f.realization_count = 1;
    f.values.assign(h.times.size(), 0.0);
    for (std::size_t n = 1; n < f.values.size(); ++n) {
        double conv = 0.5 * (h.values[n] * g.values[0] + h.values[0] * g.values[n]);
        for (std::size_t j = 1; j < n; ++j) conv += h.values[n - j] * g.values[j];
        f.values[n] = dt * conv;
    }
    return f;
}

// a(t) = [H(t) + 2 T F(t)] / G(t); with the self-consistent G this is the
// constant a0 up to solver error.
inline ObservableSeries a_closed(const ObservableSeries& g, const ObservableSeries& h,
                                 const ObservableSeries& f, double temperature) {
    if (g.size() != h.size() || g.size() != f.size())
        throw std::invalid_argument("a_closed: series must share one grid");
    ObservableSeries a;
    a.label = "a_closed";
    a.times = g.times;
    a.realization_count = 1;
    a.values.resize(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!(g.values[k] > 0.0))
            throw ComputeError("a_closed: nonpositive G at node " + std::to_string(k));
        a.values[k] = (h.values[k] + 2.0 * temperature * f.values[k]) / g.values[k];
    }
    return a;
}

struct TailFit {
    double exponent = 0.0;
    double std_error = 0.0;
    double curvature = 0.0;  // quadratic coefficient of the log-log residual shape
};

// Log-log slope over the trailing `window` fraction of the series. Throws if
// the window holds nonpositive values (exponential decay into the noise
// floor); callers fall back to the alpha/gamma fit in that case.
inline TailFit tail_exponent(const ObservableSeries& series, double window = 0.25) {
    if (!(window > 0.0 && window <= 1.0))
        throw std::invalid_argument("tail_exponent: window fraction in (0, 1]");
    const std::size_t n = series.size();
    const std::size_t from = static_cast<std::size_t>(std::floor(
        static_cast<double>(n) * (1.0 - window)));
    std::vector<double> lx, ly;
    for (std::size_t k = from; k < n; ++k) {
        if (series.times[k] <= 0.0) continue;
        if (!(series.values[k] > 0.0))
            throw ComputeError("tail_exponent: nonpositive value inside the fit window");
        lx.push_back(std::log(series.times[k]));
        ly.push_back(std::log(series.values[k]));
    }
    if (lx.size() < 16)
        throw std::invalid_argument("tail_exponent: need >= 16 positive points in the window");
    const auto fit = linear_fit(lx, ly);
    TailFit tf;
    tf.exponent = fit.slope;
    tf.std_error = fit.slope_stderr;
    tf.curvature = quadratic_coefficient(lx, ly);
    return tf;
}

} // namespace speckin
