// Marchenko-Pastur density/CDF, plain and trace-conserving ("rescaled") MP
// fits, gap-based bulk cutoff detection, and the map from bulk correlation
// eigenvalues to kinetic rates lambda = (x - x_-)^-1 - (x_+ - x_-)^-1.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "speckin/errors.hpp"
#include "speckin/linalg.hpp"

namespace speckin {

// ---------------------------------------------------------------------------
// Marchenko-Pastur family. Convention: q = n/p = variables over observations,
// so q < 1 for tall data panels. For q > 1 the sample matrix is rank
// deficient and the law carries an atom of mass 1 - 1/q at zero; the
// continuous branch below integrates to min(1, 1/q).
// ---------------------------------------------------------------------------
struct MPParams {
    double sigma2 = 1.0;
    double q = 1.0;

    void validate() const {
        if (!(sigma2 > 0.0) || !(q > 0.0))
            throw std::invalid_argument("MPParams: sigma2 and q must be > 0");
    }
};

inline std::pair<double, double> mp_edges(const MPParams& p) {
    p.validate();
    const double r = std::sqrt(p.q);
    return {p.sigma2 * (1.0 - r) * (1.0 - r), p.sigma2 * (1.0 + r) * (1.0 + r)};
}

inline double mp_density(double x, const MPParams& p) {
    const auto [xm, xp] = mp_edges(p);
    if (x <= xm || x >= xp) return 0.0;
    return std::sqrt((xp - x) * (x - xm)) / (2.0 * M_PI * p.sigma2 * p.q * x);
}

namespace detail {

// 64-point Gauss-Legendre rule on (-1, 1), generated once by Newton iteration
// on the Legendre recurrence.
inline const std::pair<std::array<double, 64>, std::array<double, 64>>& gauss64() {
    static const auto rule = [] {
        std::pair<std::array<double, 64>, std::array<double, 64>> r{};
        const int n = 64;
        for (int i = 0; i < n; ++i) {
            double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            r.first[static_cast<std::size_t>(i)] = x;
            r.second[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        return r;
    }();
    return rule;
}

inline double gauss_integrate(const std::function<double(double)>& f, double a, double b) {
    const auto& [nodes, weights] = gauss64();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(c + h * nodes[i]);
    return s * h;
}

} // namespace detail

// CDF of the MP law, including the q > 1 atom at zero. The edge square roots
// are removed with x = x_- + (x_+ - x_-) sin^2(theta), leaving a smooth
// integrand that one Gauss panel resolves to near machine precision.
inline double mp_cdf(double x, const MPParams& p) {
    const auto [xm, xp] = mp_edges(p);
    const double atom = (p.q > 1.0) ? 1.0 - 1.0 / p.q : 0.0;
    if (x < 0.0) return 0.0;
    if (x <= xm) return atom;
    if (x >= xp) return 1.0;
    const double w = xp - xm;
    const double theta_max = std::asin(std::min(1.0, std::sqrt((x - xm) / w)));
    const double mass = detail::gauss_integrate(
        [&](double theta) {
            const double s = std::sin(theta), c = std::cos(theta);
            const double xx = xm + w * s * s;
            return w * w * 2.0 * s * s * c * c / (2.0 * M_PI * p.sigma2 * p.q * xx);
        },
        0.0, theta_max);
    return std::min(1.0, atom + mass);
}

// Quantile of the continuous branch by bisection; u must exceed the atom.
inline double mp_quantile(double u, const MPParams& p) {
    const auto [xm, xp] = mp_edges(p);
    if (!(u > mp_cdf(xm, p) && u < 1.0))
        throw std::invalid_argument("mp_quantile: u outside the continuous branch");
    double lo = xm, hi = xp;
    for (int it = 0; it < 200 && (hi - lo) > 1e-14 * xp; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mp_cdf(mid, p) < u ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// MP fitting. With q fixed, sigma^2 is the spectral mean (first MP moment).
// Otherwise both parameters minimize the squared CDF mismatch on a fixed
// 256-point grid spanning the data range.
// ---------------------------------------------------------------------------
namespace detail {

// Mean over an ascending copy; fixing the summation order keeps fit_mp and
// fit_rescaled_mp bitwise consistent on the same data.
inline double spectral_mean(std::span<const double> eigenvalues) {
    std::vector<double> sorted(eigenvalues.begin(), eigenvalues.end());
    std::sort(sorted.begin(), sorted.end());
    double s = 0.0;
    for (double x : sorted) s += x;
    return s / static_cast<double>(sorted.size());
}

inline std::vector<double> cdf_grid(std::span<const double> sorted) {
    const double lo = sorted.front(), hi = sorted.back();
    const double pad = 0.025 * (hi - lo);
    std::vector<double> g(256);
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = (lo - pad) + (hi - lo + 2.0 * pad) * static_cast<double>(i) / 255.0;
    return g;
}

inline double empirical_cdf(std::span<const double> sorted, double x) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
    return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

inline double cdf_objective(std::span<const double> sorted,
                            std::span<const double> grid, const MPParams& p) {
    double s = 0.0;
    for (double g : grid) {
        const double d = empirical_cdf(sorted, g) - mp_cdf(g, p);
        s += d * d;
    }
    return s;
}

// Compact Nelder-Mead on R^2; deterministic, good enough for a smooth
// two-parameter CDF objective.
inline std::array<double, 2> nelder_mead2(
    const std::function<double(const std::array<double, 2>&)>& f,
    std::array<double, 2> start, double step, int max_iter = 400) {
    std::array<std::array<double, 2>, 3> xs = {
        start,
        {start[0] + step, start[1]},
        {start[0], start[1] + step}};
    std::array<double, 3> fs = {f(xs[0]), f(xs[1]), f(xs[2])};
    for (int it = 0; it < max_iter; ++it) {
        std::array<std::size_t, 3> order = {0, 1, 2};
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
        const auto& best = xs[order[0]];
        const auto& worst = xs[order[2]];
        if (std::abs(fs[order[2]] - fs[order[0]]) <
            1e-14 * (std::abs(fs[order[0]]) + 1e-30))
            break;
        const std::array<double, 2> centroid = {
            0.5 * (xs[order[0]][0] + xs[order[1]][0]),
            0.5 * (xs[order[0]][1] + xs[order[1]][1])};
        auto point = [&](double t) {
            return std::array<double, 2>{centroid[0] + t * (centroid[0] - worst[0]),
                                         centroid[1] + t * (centroid[1] - worst[1])};
        };
        const auto refl = point(1.0);
        const double f_refl = f(refl);
        if (f_refl < fs[order[0]]) {
            const auto exp_pt = point(2.0);
            const double f_exp = f(exp_pt);
            xs[order[2]] = (f_exp < f_refl) ? exp_pt : refl;
            fs[order[2]] = std::min(f_exp, f_refl);
        } else if (f_refl < fs[order[1]]) {
            xs[order[2]] = refl;
            fs[order[2]] = f_refl;
        } else {
            const auto con = point(-0.5);
            const double f_con = f(con);
            if (f_con < fs[order[2]]) {
                xs[order[2]] = con;
                fs[order[2]] = f_con;
            } else {
                for (std::size_t k : {order[1], order[2]}) {
                    xs[k] = {0.5 * (xs[k][0] + best[0]), 0.5 * (xs[k][1] + best[1])};
                    fs[k] = f(xs[k]);
                }
            }
        }
    }
    std::size_t arg = 0;
    for (std::size_t k = 1; k < 3; ++k)
        if (fs[k] < fs[arg]) arg = k;
    return xs[arg];
}

inline void check_fit_input(std::span<const double> eigenvalues) {
    if (eigenvalues.size() < 32)
        throw std::invalid_argument("fit_mp: need at least 32 eigenvalues");
    const auto [lo, hi] = std::minmax_element(eigenvalues.begin(), eigenvalues.end());
    if (*lo == *hi) throw ComputeError("fit_mp: degenerate spectrum (all eigenvalues equal)");
}

} // namespace detail

inline MPParams fit_mp(std::span<const double> eigenvalues,
                       std::optional<double> q_fixed = std::nullopt) {
    detail::check_fit_input(eigenvalues);
    if (q_fixed) {
        if (!(*q_fixed > 0.0)) throw std::invalid_argument("fit_mp: q must be > 0");
        return {detail::spectral_mean(eigenvalues), *q_fixed};
    }
    std::vector<double> sorted(eigenvalues.begin(), eigenvalues.end());
    std::sort(sorted.begin(), sorted.end());
    const auto grid = detail::cdf_grid(sorted);
    // Moment-based start: mean = sigma^2, variance = sigma^4 q.
    const double m = detail::spectral_mean(eigenvalues);
    const double v = variance(eigenvalues, eigenvalues.size());
    const double q0 = std::clamp(v / (m * m), 1e-3, 8.0);
    const auto best = detail::nelder_mead2(
        [&](const std::array<double, 2>& u) {
            return detail::cdf_objective(sorted, grid,
                                         {std::exp(u[0]), std::exp(u[1])});
        },
        {std::log(m), std::log(q0)}, 0.25);
    return {std::exp(best[0]), std::exp(best[1])};
}

// Removes the n_outliers largest eigenvalues and fits the remaining bulk with
// sigma^2 pinned so that the total trace is conserved:
//   sigma^2_bulk = (sum all - sum outliers) / (N - n_outliers).
// q is refit on the bulk CDF unless fixed.
inline MPParams fit_rescaled_mp(std::span<const double> eigenvalues,
                                std::size_t n_outliers,
                                std::optional<double> q_fixed = std::nullopt) {
    detail::check_fit_input(eigenvalues);
    if (n_outliers >= eigenvalues.size() / 2)
        throw std::invalid_argument("fit_rescaled_mp: n_outliers must be < N/2");

    std::vector<double> sorted(eigenvalues.begin(), eigenvalues.end());
    std::sort(sorted.begin(), sorted.end());  // ascending; outliers at the back
    const std::size_t n_bulk = sorted.size() - n_outliers;
    const double sigma2_bulk =
        detail::spectral_mean(std::span<const double>(sorted.data(), n_bulk));

    if (q_fixed) {
        if (!(*q_fixed > 0.0)) throw std::invalid_argument("fit_rescaled_mp: q must be > 0");
        return {sigma2_bulk, *q_fixed};
    }
    std::span<const double> bulk(sorted.data(), n_bulk);
    if (bulk.front() == bulk.back())
        throw ComputeError("fit_rescaled_mp: degenerate bulk");
    std::vector<double> bulk_sorted(bulk.begin(), bulk.end());
    const auto grid = detail::cdf_grid(bulk_sorted);
    // 1-D golden-section on log q with sigma^2 held at the trace value.
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = std::log(1e-3), hi = std::log(8.0);
    auto f = [&](double lq) {
        return detail::cdf_objective(bulk_sorted, grid, {sigma2_bulk, std::exp(lq)});
    };
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 120; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = f(x2);
        }
    }
    return {sigma2_bulk, std::exp(0.5 * (lo + hi))};
}

// Sup distance between the empirical CDF of `eigenvalues` and the MP CDF;
// the fit-quality number reported next to each fit.
inline double mp_cdf_distance(std::span<const double> eigenvalues, const MPParams& p) {
    std::vector<double> sorted(eigenvalues.begin(), eigenvalues.end());
    std::sort(sorted.begin(), sorted.end());
    return ks_distance_sorted(sorted, [&](double x) { return mp_cdf(x, p); });
}

// ---------------------------------------------------------------------------
// Bulk cutoff. Eigenvalues inside a connected component sit ~W/N apart, so a
// consecutive gap larger than kappa * W / N separates spikes from the bulk.
// Returns the number of leading spikes; `degenerate` is set when no split of
// the form (all large gaps) | (all small gaps) exists, in which case the whole
// spectrum is treated as bulk.
// ---------------------------------------------------------------------------
struct CutoffResult {
    std::size_t index = 0;
    bool degenerate = false;
};

inline CutoffResult detect_bulk_cutoff(std::span<const double> eigenvalues_desc,
                                       double kappa = 10.0) {
    const std::size_t n = eigenvalues_desc.size();
    if (n < 8) throw std::invalid_argument("detect_bulk_cutoff: need >= 8 eigenvalues");
    if (!(kappa > 0.0)) throw std::invalid_argument("detect_bulk_cutoff: kappa must be > 0");
    for (std::size_t i = 1; i < n; ++i)
        if (eigenvalues_desc[i - 1] < eigenvalues_desc[i])
            throw std::invalid_argument("detect_bulk_cutoff: input not descending");

    const double width = eigenvalues_desc.front() - eigenvalues_desc.back();
    if (!(width > 0.0)) return {0, true};
    const double threshold = kappa * width / static_cast<double>(n);

    std::size_t last_big = n;  // sentinel: none
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (eigenvalues_desc[i] - eigenvalues_desc[i + 1] > threshold) last_big = i;
    if (last_big == n) return {0, false};  // clean all-bulk spectrum

    const std::size_t candidate = last_big + 1;
    for (std::size_t i = 0; i < candidate; ++i)
        if (!(eigenvalues_desc[i] - eigenvalues_desc[i + 1] > threshold))
            return {0, true};  // interior gap structure, no clean split
    if (n - candidate < 2) return {0, true};  // nothing left to call a bulk
    return {candidate, false};
}

// ---------------------------------------------------------------------------
// Bulk spectrum and the kinetic-rate map.
// ---------------------------------------------------------------------------
struct BulkSpectrum {
    std::vector<double> bulk_eigenvalues;  // descending
    double x_minus = 0.0;
    double x_plus = 0.0;
    std::size_t cutoff_index = 0;

    void validate() const {
        if (bulk_eigenvalues.size() < 2)
            throw std::invalid_argument("BulkSpectrum: need at least 2 bulk eigenvalues");
        if (!(x_minus < bulk_eigenvalues.back()))
            throw std::invalid_argument("BulkSpectrum: x_minus must lie strictly below the bulk");
        if (!(bulk_eigenvalues.front() <= x_plus))
            throw std::invalid_argument("BulkSpectrum: x_plus must bound the bulk above");
    }
};

// Builds the bulk from a descending spectrum and a cutoff index. x_plus is the
// largest bulk eigenvalue, so the top bulk mode maps to lambda = 0 exactly.
// x_minus is the fitted MP lower edge when available, but never closer to the
// smallest bulk eigenvalue than its last consecutive gap; that local spacing
// is the natural resolution of the lower edge, and a nearer x_minus would
// blow up the largest kinetic rate (and with it the integrator step count).
inline BulkSpectrum make_bulk_spectrum(std::span<const double> eigenvalues_desc,
                                       std::size_t cutoff_index,
                                       std::optional<double> fitted_lower_edge = std::nullopt) {
    if (cutoff_index + 2 > eigenvalues_desc.size())
        throw std::invalid_argument("make_bulk_spectrum: fewer than 2 bulk eigenvalues");
    BulkSpectrum b;
    b.cutoff_index = cutoff_index;
    b.bulk_eigenvalues.assign(eigenvalues_desc.begin() +
                                  static_cast<std::ptrdiff_t>(cutoff_index),
                              eigenvalues_desc.end());
    const std::size_t nc = b.bulk_eigenvalues.size();
    b.x_plus = b.bulk_eigenvalues.front();
    const double x_min = b.bulk_eigenvalues.back();
    double gap = b.bulk_eigenvalues[nc - 2] - x_min;
    if (!(gap > 0.0)) gap = (b.x_plus - x_min) / static_cast<double>(nc);
    if (!(gap > 0.0))
        throw ComputeError("make_bulk_spectrum: bulk has zero width");
    b.x_minus = x_min - gap;
    if (fitted_lower_edge && std::isfinite(*fitted_lower_edge))
        b.x_minus = std::min(b.x_minus, *fitted_lower_edge);
    b.validate();
    return b;
}

struct KineticSpectrum {
    std::vector<double> lambdas;  // ascending, lambdas[0] == 0 for mapped bulks
    double edge_span = 0.0;       // x_plus - x_minus, kept for the T_c cutoff rule

    std::size_t size() const { return lambdas.size(); }
    double weight() const { return 1.0 / static_cast<double>(lambdas.size()); }
    double lambda_max() const { return lambdas.back(); }
};

inline KineticSpectrum lambda_map(const BulkSpectrum& bulk) {
    bulk.validate();
    const double span = bulk.x_plus - bulk.x_minus;
    KineticSpectrum ks;
    ks.edge_span = span;
    ks.lambdas.reserve(bulk.bulk_eigenvalues.size());
    const double edge_term = 1.0 / span;
    for (std::size_t mu = 0; mu < bulk.bulk_eigenvalues.size(); ++mu) {
        const double x = bulk.bulk_eigenvalues[mu];
        if (!(x > bulk.x_minus))
            throw ComputeError("lambda_map: eigenvalue " + std::to_string(mu) +
                               " does not exceed x_minus");
        ks.lambdas.push_back(1.0 / (x - bulk.x_minus) - edge_term);
    }
    // Descending x maps to ascending lambda; the top mode lands exactly on 0.
    ks.lambdas.front() = 0.0;
    return ks;
}

// Deterministic kinetic spectrum drawn from the MP law itself: eigenvalues at
// the (i+1/2)/n quantiles of the continuous branch, mapped with the analytic
// edges. Rates above `lambda_cap` are clamped; those modes decay within
// t ~ 1/lambda_cap and carry no late-time information, while leaving them
// unbounded would force the step size of every consumer to chase the handful
// of samples closest to x_-.
inline KineticSpectrum mp_kinetic_spectrum(const MPParams& p, std::size_t n,
                                           double lambda_cap = 20.0) {
    if (n < 2) throw std::invalid_argument("mp_kinetic_spectrum: n must be >= 2");
    const auto [xm, xp] = mp_edges(p);
    const double atom = (p.q > 1.0) ? 1.0 - 1.0 / p.q : 0.0;
    KineticSpectrum ks;
    ks.edge_span = xp - xm;
    ks.lambdas.resize(n);
    const double edge_term = 1.0 / (xp - xm);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = atom + (1.0 - atom) * (static_cast<double>(i) + 0.5) /
                                    static_cast<double>(n);
        const double x = mp_quantile(u, p);
        const double lam = 1.0 / (x - xm) - edge_term;
        ks.lambdas[n - 1 - i] = std::min(lam, lambda_cap);
    }
    std::sort(ks.lambdas.begin(), ks.lambdas.end());
    return ks;
}

// ---------------------------------------------------------------------------
// One-call spectrum analysis used by the CLI and the detection sweep.
// ---------------------------------------------------------------------------
struct SpectrumOptions {
    double kappa = 10.0;
    std::optional<double> q_fixed;       // typically N / (P-1) of the panel
    std::optional<std::size_t> manual_cutoff;
    std::optional<std::size_t> n_outliers;  // default: eigenvalues above fitted x_+
};

struct SpectrumAnalysis {
    SpectralDecomposition decomposition;
    CutoffResult cutoff;
    MPParams plain_fit;
    MPParams rescaled_fit;
    std::size_t n_outliers = 0;
    double plain_distance = 0.0;     // on the full spectrum
    double rescaled_distance = 0.0;  // on the bulk only
    BulkSpectrum bulk;
    KineticSpectrum kinetic;
};

inline SpectrumAnalysis analyze_correlation_spectrum(const SymmetricMatrix& corr,
                                                     const SpectrumOptions& opts = {}) {
    SpectrumAnalysis a;
    a.decomposition = eigh(corr);
    const auto& eigs = a.decomposition.eigenvalues;

    a.cutoff = opts.manual_cutoff ? CutoffResult{*opts.manual_cutoff, false}
                                  : detect_bulk_cutoff(eigs, opts.kappa);
    a.plain_fit = fit_mp(eigs, opts.q_fixed);
    a.plain_distance = mp_cdf_distance(eigs, a.plain_fit);

    if (opts.n_outliers) {
        a.n_outliers = *opts.n_outliers;
    } else {
        const double xp = mp_edges(a.plain_fit).second;
        a.n_outliers = 0;
        for (double x : eigs)
            if (x > xp) ++a.n_outliers;
        a.n_outliers = std::min(a.n_outliers, eigs.size() / 2 - 1);
    }
    a.rescaled_fit = fit_rescaled_mp(eigs, a.n_outliers, opts.q_fixed);
    std::vector<double> bulk_only(eigs.begin() + static_cast<std::ptrdiff_t>(a.n_outliers),
                                  eigs.end());
    a.rescaled_distance = mp_cdf_distance(bulk_only, a.rescaled_fit);

    a.bulk = make_bulk_spectrum(eigs, a.cutoff.index,
                                mp_edges(a.rescaled_fit).first);
    a.kinetic = lambda_map(a.bulk);
    return a;
}

} // namespace speckin
