// Price-panel ingestion, log-returns, the return correlation matrix, per-asset
// GBM estimation/simulation, and the beta interpolation between real prices
// and independent (beta > 0) or fully correlated (beta < 0) GBM paths.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "speckin/csv.hpp"
#include "speckin/errors.hpp"
#include "speckin/linalg.hpp"
#include "speckin/rng.hpp"

namespace speckin {

// Aligned daily close prices: N assets over P dates, all strictly positive.
struct PricePanel {
    std::vector<std::string> tickers;
    std::vector<std::string> dates;   // ISO-8601, strictly increasing
    std::vector<double> prices;       // row-major N x P

    std::size_t assets() const { return tickers.size(); }
    std::size_t days() const { return dates.size(); }
    double price(std::size_t i, std::size_t t) const { return prices[i * days() + t]; }
    std::span<const double> row(std::size_t i) const { return {prices.data() + i * days(), days()}; }
};

struct ReturnPanel {
    std::vector<std::string> tickers;
    std::vector<std::string> dates;   // length P-1 (stamp of the later day)
    std::vector<double> returns;      // row-major N x (P-1)

    std::size_t assets() const { return tickers.size(); }
    std::size_t steps() const { return dates.size(); }
    double ret(std::size_t i, std::size_t t) const { return returns[i * steps() + t]; }
    std::span<const double> row(std::size_t i) const { return {returns.data() + i * steps(), steps()}; }
};

struct GBMParams {
    double mu = 0.0;     // per-day drift (includes the +sigma^2/2 Ito term)
    double sigma = 0.0;  // per-day volatility, >= 0
    double s0 = 1.0;     // initial price, > 0
};

// ---------------------------------------------------------------------------
// Ingestion. Header "date,T1,T2,...", one row per trading day. An asset is
// kept only if its coverage (fraction of parseable, positive cells) reaches
// `min_coverage`; afterwards any date still missing a value for a surviving
// asset is dropped, so the returned panel is complete. With the default
// min_coverage = 1 this reduces to "any gap drops the asset".
// ---------------------------------------------------------------------------
inline PricePanel load_prices(const std::string& path, double min_coverage = 1.0) {
    std::ifstream in(path);
    if (!in) throw ConfigError("load_prices: cannot open '" + path + "'");
    auto rows = parse_csv(in);
    if (rows.empty()) throw ConfigError("load_prices: no data rows in '" + path + "'");
    const auto& header = rows.front();
    if (header.size() < 2 || header[0] != "date")
        throw ConfigError("load_prices: expected header 'date,TICKER,...' in '" + path + "'");
    if (rows.size() < 2) throw ConfigError("load_prices: no data rows in '" + path + "'");

    const std::size_t n_all = header.size() - 1;
    const std::size_t p_all = rows.size() - 1;
    std::vector<double> cells(n_all * p_all, -1.0);  // -1 marks missing
    std::vector<std::string> dates(p_all);
    for (std::size_t t = 0; t < p_all; ++t) {
        const auto& row = rows[t + 1];
        if (row.size() != header.size())
            throw ConfigError("load_prices: ragged row " + std::to_string(t + 2));
        dates[t] = row[0];
        for (std::size_t i = 0; i < n_all; ++i) {
            const std::string& cell = row[i + 1];
            if (cell.empty()) continue;
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                if (used == cell.size() && v > 0.0 && std::isfinite(v))
                    cells[i * p_all + t] = v;
            } catch (const std::exception&) {
                // unparseable cell counts as missing
            }
        }
    }
    for (std::size_t t = 1; t < p_all; ++t)
        if (!(dates[t - 1] < dates[t]))
            throw ConfigError("load_prices: dates not strictly increasing at row " +
                              std::to_string(t + 2));

    std::vector<std::size_t> kept_assets;
    for (std::size_t i = 0; i < n_all; ++i) {
        std::size_t present = 0;
        for (std::size_t t = 0; t < p_all; ++t)
            if (cells[i * p_all + t] > 0.0) ++present;
        if (static_cast<double>(present) >=
            min_coverage * static_cast<double>(p_all) - 1e-12)
            kept_assets.push_back(i);
    }
    std::vector<std::size_t> kept_dates;
    for (std::size_t t = 0; t < p_all; ++t) {
        bool full = true;
        for (std::size_t i : kept_assets)
            if (!(cells[i * p_all + t] > 0.0)) {
                full = false;
                break;
            }
        if (full) kept_dates.push_back(t);
    }
    if (kept_assets.size() < 2)
        throw ConfigError("load_prices: fewer than 2 assets after filtering");
    if (kept_dates.size() < 8)
        throw ConfigError("load_prices: fewer than 8 dates after filtering");

    PricePanel panel;
    for (std::size_t i : kept_assets) panel.tickers.push_back(header[i + 1]);
    for (std::size_t t : kept_dates) panel.dates.push_back(dates[t]);
    panel.prices.resize(kept_assets.size() * kept_dates.size());
    for (std::size_t a = 0; a < kept_assets.size(); ++a)
        for (std::size_t d = 0; d < kept_dates.size(); ++d)
            panel.prices[a * kept_dates.size() + d] =
                cells[kept_assets[a] * p_all + kept_dates[d]];
    return panel;
}

inline void save_prices(const PricePanel& panel, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("save_prices: cannot open '" + path + "' for writing");
    out << "date";
    for (const auto& t : panel.tickers) out << ',' << csv_escape(t);
    out << "\n";
    for (std::size_t t = 0; t < panel.days(); ++t) {
        out << panel.dates[t];
        for (std::size_t i = 0; i < panel.assets(); ++i)
            out << ',' << format_double(panel.price(i, t));
        out << "\n";
    }
}

inline ReturnPanel log_returns(const PricePanel& panel) {
    if (panel.days() < 2) throw std::invalid_argument("log_returns: need >= 2 dates");
    ReturnPanel rp;
    rp.tickers = panel.tickers;
    rp.dates.assign(panel.dates.begin() + 1, panel.dates.end());
    const std::size_t n = panel.assets(), steps = panel.days() - 1;
    rp.returns.resize(n * steps);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < steps; ++t)
            rp.returns[i * steps + t] =
                std::log(panel.price(i, t + 1)) - std::log(panel.price(i, t));
    return rp;
}

// Pearson correlation of the return rows, time averages with divisor P-1
// (the number of return observations; population convention). Diagonal is
// exactly 1 by construction.
inline SymmetricMatrix correlation_matrix(const ReturnPanel& rp) {
    const std::size_t n = rp.assets(), steps = rp.steps();
    if (steps < 2) throw std::invalid_argument("correlation_matrix: need >= 2 time points");
    std::vector<double> means(n), sds(n);
    for (std::size_t i = 0; i < n; ++i) {
        means[i] = mean(rp.row(i));
        sds[i] = std::sqrt(variance(rp.row(i), steps));
        if (!(sds[i] > 0.0))
            throw ComputeError("correlation_matrix: zero variance for asset '" +
                               rp.tickers[i] + "'");
    }
    SymmetricMatrix c(n);
    for (std::size_t i = 0; i < n; ++i) {
        c.set(i, i, 1.0);
        for (std::size_t j = 0; j < i; ++j) {
            double cov = 0.0;
            for (std::size_t t = 0; t < steps; ++t)
                cov += (rp.ret(i, t) - means[i]) * (rp.ret(j, t) - means[j]);
            cov /= static_cast<double>(steps);
            c.set(i, j, cov / (sds[i] * sds[j]));
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// GBM estimation and simulation. sigma is the sample standard deviation of
// daily log-returns (divisor P-2); mu carries the +sigma^2/2 Ito correction
// so that simulate_gbm(estimate_gbm(S)) reproduces the mean log-return.
// ---------------------------------------------------------------------------
inline GBMParams estimate_gbm(std::span<const double> prices) {
    if (prices.size() < 8) throw std::invalid_argument("estimate_gbm: need >= 8 prices");
    std::vector<double> rets(prices.size() - 1);
    for (std::size_t t = 0; t + 1 < prices.size(); ++t) {
        if (!(prices[t] > 0.0) || !(prices[t + 1] > 0.0))
            throw std::invalid_argument("estimate_gbm: nonpositive price");
        rets[t] = std::log(prices[t + 1]) - std::log(prices[t]);
    }
    GBMParams g;
    g.s0 = prices[0];
    const double mean_ret = mean(rets);
    g.sigma = (rets.size() >= 2) ? std::sqrt(variance(rets, rets.size() - 1)) : 0.0;
    g.mu = mean_ret + 0.5 * g.sigma * g.sigma;
    return g;
}

// S_t = S_0 exp((mu - sigma^2/2) t + sigma sum_{s<=t} xi_s), t = 0..horizon-1.
inline std::vector<double> simulate_gbm(const GBMParams& params, std::size_t horizon,
                                        NormalStream& noise) {
    if (horizon < 1) throw std::invalid_argument("simulate_gbm: horizon must be >= 1");
    if (!(params.s0 > 0.0) || params.sigma < 0.0)
        throw std::invalid_argument("simulate_gbm: invalid parameters");
    std::vector<double> s(horizon);
    s[0] = params.s0;
    const double drift = params.mu - 0.5 * params.sigma * params.sigma;
    double w = 0.0;
    for (std::size_t t = 1; t < horizon; ++t) {
        w += noise.next();
        s[t] = params.s0 * std::exp(drift * static_cast<double>(t) + params.sigma * w);
    }
    return s;
}

inline std::vector<double> simulate_gbm(const GBMParams& params, std::size_t horizon,
                                        std::uint64_t seed, std::uint64_t stream_id = 0) {
    NormalStream noise(seed, rng_purpose::stream(rng_purpose::kGbmAsset, stream_id));
    return simulate_gbm(params, horizon, noise);
}

// ---------------------------------------------------------------------------
// Beta interpolation.
//   beta >= 0:  S_sim = beta * S_GBM + (1-beta) * S,   independent noise per asset
//   beta <  0:  S_sim = -beta * S_GBMcorr + (1+beta) * S,  one shared noise stream
// Per-asset (mu, sigma, S0) come from estimate_gbm on the real series; with
// `share_gbm_params` set, every correlated walk reuses asset 0's parameters
// instead (both readings of "same random seed" are thereby available).
// ---------------------------------------------------------------------------
inline PricePanel build_beta_panel(const PricePanel& real, double beta,
                                   std::uint64_t seed, bool share_gbm_params = false) {
    if (!(beta >= -1.0 && beta <= 1.0))
        throw std::invalid_argument("build_beta_panel: beta must lie in [-1, 1]");
    const std::size_t n = real.assets(), p = real.days();
    PricePanel out;
    out.tickers = real.tickers;
    out.dates = real.dates;
    out.prices.resize(n * p);

    if (beta == 0.0) {
        out.prices = real.prices;
        return out;
    }

    std::vector<double> shared_increments;
    if (beta < 0.0) {
        NormalStream shared(seed, rng_purpose::stream(rng_purpose::kGbmShared));
        shared_increments.resize(p - 1);
        for (auto& x : shared_increments) x = shared.next();
    }

    const GBMParams base = share_gbm_params ? estimate_gbm(real.row(0)) : GBMParams{};
    for (std::size_t i = 0; i < n; ++i) {
        GBMParams g = share_gbm_params && beta < 0.0 ? base : estimate_gbm(real.row(i));
        if (share_gbm_params && beta < 0.0) g.s0 = real.price(i, 0);
        std::vector<double> gbm;
        if (beta > 0.0) {
            NormalStream noise(seed, rng_purpose::stream(rng_purpose::kGbmAsset, i));
            gbm = simulate_gbm(g, p, noise);
        } else {
            gbm.resize(p);
            gbm[0] = g.s0;
            const double drift = g.mu - 0.5 * g.sigma * g.sigma;
            double w = 0.0;
            for (std::size_t t = 1; t < p; ++t) {
                w += shared_increments[t - 1];
                gbm[t] = g.s0 * std::exp(drift * static_cast<double>(t) + g.sigma * w);
            }
        }
        const double wg = std::abs(beta), wr = 1.0 - std::abs(beta);
        for (std::size_t t = 0; t < p; ++t)
            out.prices[i * p + t] = wg * gbm[t] + wr * real.price(i, t);
    }
    return out;
}

} // namespace speckin
