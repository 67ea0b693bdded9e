// Synthetic price-panel generators: independent GBM walks, a shared-factor
// panel with tunable common-noise weight, and block-correlated panels with a
// given in-block return correlation. Used by the `synth` subcommand and by
// the verification suites, so no external data is ever required.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "speckin/market.hpp"
#include "speckin/rng.hpp"

namespace speckin {

// Weekday sequence starting 2019-01-02, ISO-8601.
inline std::vector<std::string> trading_dates(std::size_t count) {
    std::vector<std::string> dates;
    dates.reserve(count);
    int y = 2019, m = 1, d = 1;
    int dow = 2;  // 2019-01-01 was a Tuesday
    auto days_in = [](int yy, int mm) {
        static const int dm[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
        if (mm == 2 && (yy % 4 == 0 && (yy % 100 != 0 || yy % 400 == 0))) return 29;
        return dm[mm - 1];
    };
    while (dates.size() < count) {
        ++d;
        dow = (dow + 1) % 7;
        if (d > days_in(y, m)) {
            d = 1;
            if (++m > 12) {
                m = 1;
                ++y;
            }
        }
        if (dow == 0 || dow == 6) continue;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d % 100);
        dates.emplace_back(buf);
    }
    return dates;
}

struct SynthSpec {
    std::size_t assets = 20;
    std::size_t days = 250;
    std::uint64_t seed = 1;
    double common_weight = 0.0;   // loading on one shared shock (shared-noise panel)
    std::size_t blocks = 0;       // > 0: partition assets into equal blocks
    double block_rho = 0.0;       // in-block return correlation
    double sigma_lo = 0.010;      // per-day volatility range across assets
    double sigma_hi = 0.022;
    double drift = 0.0002;
};

namespace detail {

inline PricePanel synth_panel(const SynthSpec& spec) {
    if (spec.assets < 2 || spec.days < 8)
        throw std::invalid_argument("synth_panel: need >= 2 assets and >= 8 days");
    PricePanel panel;
    panel.dates = trading_dates(spec.days);
    panel.prices.resize(spec.assets * spec.days);
    for (std::size_t i = 0; i < spec.assets; ++i) {
        char name[16];
        std::snprintf(name, sizeof(name), "SYN%03zu", i % 1000);
        panel.tickers.emplace_back(name);
    }

    const std::size_t steps = spec.days - 1;
    NormalStream common(spec.seed, rng_purpose::stream(rng_purpose::kSynth, 0));
    std::vector<double> shared(steps);
    for (auto& x : shared) x = common.next();

    std::vector<std::vector<double>> block_factors;
    if (spec.blocks > 0) {
        block_factors.resize(spec.blocks, std::vector<double>(steps));
        for (std::size_t b = 0; b < spec.blocks; ++b) {
            NormalStream bf(spec.seed, rng_purpose::stream(rng_purpose::kSynth, 1 + b));
            for (auto& x : block_factors[b]) x = bf.next();
        }
    }

    for (std::size_t i = 0; i < spec.assets; ++i) {
        NormalStream idio(spec.seed, rng_purpose::stream(rng_purpose::kSynth, 1000 + i));
        NormalStream init(spec.seed, rng_purpose::stream(rng_purpose::kSynth, 500000 + i));
        const double frac = spec.assets > 1
                                ? static_cast<double>(i) / static_cast<double>(spec.assets - 1)
                                : 0.0;
        const double sigma = spec.sigma_lo + (spec.sigma_hi - spec.sigma_lo) * frac;
        const double s0 = 20.0 + 90.0 * std::abs(std::tanh(init.next()));
        double w_common = spec.common_weight;
        double w_block = 0.0;
        std::size_t block = 0;
        if (spec.blocks > 0) {
            block = i % spec.blocks;
            w_block = std::sqrt(spec.block_rho);
        }
        const double w2 = w_common * w_common + w_block * w_block;
        if (w2 > 1.0) throw std::invalid_argument("synth_panel: factor loadings exceed 1");
        const double w_idio = std::sqrt(1.0 - w2);

        double ls = std::log(s0);
        panel.prices[i * spec.days] = s0;
        for (std::size_t t = 1; t < spec.days; ++t) {
            double shock = w_idio * idio.next() + w_common * shared[t - 1];
            if (spec.blocks > 0) shock += w_block * block_factors[block][t - 1];
            ls += spec.drift - 0.5 * sigma * sigma + sigma * shock;
            panel.prices[i * spec.days + t] = std::exp(ls);
        }
    }
    return panel;
}

} // namespace detail

// Independent GBM walks; the return correlation matrix is pure sampling noise.
inline PricePanel make_gbm_panel(std::size_t assets, std::size_t days, std::uint64_t seed) {
    SynthSpec spec;
    spec.assets = assets;
    spec.days = days;
    spec.seed = seed;
    return detail::synth_panel(spec);
}

// One market-like factor loading `weight` on every asset (pairwise return
// correlation ~ weight^2) plus idiosyncratic noise.
inline PricePanel make_shared_noise_panel(std::size_t assets, std::size_t days,
                                          std::uint64_t seed, double weight) {
    if (!(weight >= 0.0 && weight <= 1.0))
        throw std::invalid_argument("make_shared_noise_panel: weight in [0, 1]");
    SynthSpec spec;
    spec.assets = assets;
    spec.days = days;
    spec.seed = seed;
    spec.common_weight = weight;
    return detail::synth_panel(spec);
}

// `blocks` equal groups with in-block correlation rho; spikes near
// N_block * rho + 1 - rho separate from the bulk.
inline PricePanel make_block_panel(std::size_t assets, std::size_t days,
                                   std::uint64_t seed, std::size_t blocks, double rho) {
    if (blocks < 1 || blocks > assets)
        throw std::invalid_argument("make_block_panel: invalid block count");
    if (!(rho >= 0.0 && rho < 1.0))
        throw std::invalid_argument("make_block_panel: rho in [0, 1)");
    SynthSpec spec;
    spec.assets = assets;
    spec.days = days;
    spec.seed = seed;
    spec.blocks = blocks;
    spec.block_rho = rho;
    return detail::synth_panel(spec);
}

} // namespace speckin
