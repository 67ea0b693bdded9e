// Small statistics toolbox: moments, Gaussian CDF, scaled erfc, KS distance
// and least-squares line fits in plain or log-log coordinates.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace speckin {

inline double mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean: empty input");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

// Variance about the mean with an explicit divisor (n for population
// statistics, n-1 for sample statistics).
inline double variance(std::span<const double> xs, std::size_t divisor) {
    if (divisor == 0) throw std::invalid_argument("variance: zero divisor");
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(divisor);
}

inline double gaussian_cdf(double x, double mu = 0.0, double sigma = 1.0) {
    return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0)));
}

// Scaled complementary error function e^{x^2} erfc(x) for x >= 0. Direct
// evaluation below x = 7 (no overflow, erfc(7) ~ 4e-23 is still normal);
// asymptotic series above, truncated at its smallest term.
inline double erfcx(double x) {
    if (x < 0.0) throw std::invalid_argument("erfcx: negative argument");
    if (x < 7.0) return std::exp(x * x) * std::erfc(x);
    const double inv2x2 = 1.0 / (2.0 * x * x);
    double mag = 1.0, sum = 1.0;
    int sign = 1;
    for (int k = 1; k < 64; ++k) {
        const double next = mag * static_cast<double>(2 * k - 1) * inv2x2;
        if (next >= mag) break;  // series started diverging
        mag = next;
        sign = -sign;
        sum += sign * mag;
        if (mag < 1e-18 * sum) break;
    }
    return sum / (x * std::sqrt(M_PI));
}

// 1/(x sqrt(pi)) - erfcx(x): the quantity erfcx falls short of its leading
// asymptote. Needed where the direct difference would cancel catastrophically.
inline double erfcx_deficit(double x) {
    const double lead = 1.0 / (x * std::sqrt(M_PI));
    if (x < 7.0) return lead - erfcx(x);
    const double inv2x2 = 1.0 / (2.0 * x * x);
    double mag = 1.0, sum = 0.0;
    int sign = -1;
    for (int k = 1; k < 64; ++k) {
        const double next = mag * static_cast<double>(2 * k - 1) * inv2x2;
        if (next >= mag && k > 1) break;
        mag = next;
        sign = -sign;   // k=1 term enters with +, k=2 with -, ...
        sum += sign * mag;
        if (mag < 1e-18 * std::abs(sum)) break;
    }
    return lead * sum;
}

// Kolmogorov-Smirnov distance between the empirical CDF of `sorted` (must be
// ascending) and a reference CDF.
inline double ks_distance_sorted(std::span<const double> sorted,
                                 const std::function<double(double)>& cdf) {
    if (sorted.empty()) throw std::invalid_argument("ks_distance: empty input");
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

inline double ks_distance(std::vector<double> values,
                          const std::function<double(double)>& cdf) {
    std::sort(values.begin(), values.end());
    return ks_distance_sorted(values, cdf);
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double r2 = 0.0;
};

inline LinearFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 3)
        throw std::invalid_argument("linear_fit: need >= 3 matched points");
    const double n = static_cast<double>(xs.size());
    const double mx = mean(xs), my = mean(ys);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx <= 0.0) throw std::invalid_argument("linear_fit: degenerate abscissae");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (f.intercept + f.slope * xs[i]);
        ss_res += r * r;
    }
    f.slope_stderr = std::sqrt(ss_res / (n - 2.0) / sxx);
    f.r2 = (syy > 0.0) ? std::max(0.0, 1.0 - ss_res / syy) : 1.0;
    return f;
}

// Coefficient c2 of y ~ c0 + c1 x + c2 x^2 (used as a curvature diagnostic
// for log-log fits). Plain 3x3 normal equations, adequate at test scale.
inline double quadratic_coefficient(std::span<const double> xs,
                                    std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 4)
        throw std::invalid_argument("quadratic_coefficient: need >= 4 points");
    double s[5] = {0, 0, 0, 0, 0};
    double b0 = 0, b1 = 0, b2 = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i], x2 = x * x;
        s[0] += 1;
        s[1] += x;
        s[2] += x2;
        s[3] += x2 * x;
        s[4] += x2 * x2;
        b0 += ys[i];
        b1 += ys[i] * x;
        b2 += ys[i] * x2;
    }
    // Solve [s0 s1 s2; s1 s2 s3; s2 s3 s4] c = b by Gaussian elimination.
    double m[3][4] = {{s[0], s[1], s[2], b0},
                      {s[1], s[2], s[3], b1},
                      {s[2], s[3], s[4], b2}};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        std::swap(m[col], m[piv]);
        if (m[col][col] == 0.0)
            throw std::invalid_argument("quadratic_coefficient: singular system");
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
        }
    }
    return m[2][3] / m[2][2];
}

} // namespace speckin
