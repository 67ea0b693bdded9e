// spectral-kinetics: batch pipeline from price panels to relaxation-kinetics
// signal detection. Subcommands:
//   synth     generate synthetic panels (independent GBM, shared-noise, blocks)
//   spectrum  correlation spectrum, MP fits, bulk cutoff, histogram figure
//   simulate  Langevin ensemble runs: a(t), F_mu(t,0), K(t) + figures
//   analyze   Volterra theory on a synthetic MP spectrum + beta-sweep detection
// Exit codes: 0 ok, 1 computational failure, 2 configuration/input error.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "speckin/analytics.hpp"
#include "speckin/config.hpp"
#include "speckin/detect.hpp"
#include "speckin/kinetics.hpp"
#include "speckin/market.hpp"
#include "speckin/report_io.hpp"
#include "speckin/rmt.hpp"
#include "speckin/series.hpp"
#include "speckin/svg.hpp"
#include "speckin/synth.hpp"

namespace fs = std::filesystem;
using namespace speckin;

namespace {

std::vector<std::string> file_header(const RunConfig& cfg) {
    return {"config_hash=" + hash_hex(cfg.hash()),
            "master_seed=" + std::to_string(cfg.seed)};
}

void write_text_file(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << body;
}

std::string cell_tag(double beta, double ratio) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "beta%+.2f_t%.2f", beta, ratio);
    return buf;
}

PricePanel load_input_panel(const RunConfig& cfg) {
    return load_prices(cfg.input_path, cfg.min_coverage);
}

double detect_amplitude(const RunConfig& cfg) {
    return cfg.initial_amplitude > 0.0 ? cfg.initial_amplitude : std::sqrt(cfg.a0);
}

KineticsConfig kinetics_config(const RunConfig& cfg, const KineticSpectrum& spectrum,
                               const PotentialParams& pot, double temperature,
                               std::uint64_t seed) {
    KineticsConfig kc;
    kc.temperature = temperature;
    kc.ensemble = cfg.ensemble;
    kc.seed = seed;
    kc.initial_amplitude = detect_amplitude(cfg);
    kc.threads = cfg.threads;
    kc.dt = cfg.dt > 0.0 ? cfg.dt
                         : KineticsConfig::auto_dt(spectrum, pot, kc.initial_amplitude);
    kc.steps = cfg.steps > 0 ? cfg.steps
                             : static_cast<std::size_t>(cfg.horizon / kc.dt);
    return kc;
}

// ----------------------------------------------------------------- synth
int cmd_synth(const RunConfig& cfg) {
    cfg.validate(false);
    fs::create_directories(cfg.output_dir);
    PricePanel panel;
    if (cfg.synth_kind == "gbm")
        panel = make_gbm_panel(cfg.synth_assets, cfg.synth_days, cfg.seed);
    else if (cfg.synth_kind == "shared")
        panel = make_shared_noise_panel(cfg.synth_assets, cfg.synth_days, cfg.seed,
                                        cfg.synth_weight);
    else if (cfg.synth_kind == "blocks")
        panel = make_block_panel(cfg.synth_assets, cfg.synth_days, cfg.seed,
                                 cfg.synth_blocks, cfg.synth_rho);
    else
        throw ConfigError("synth.kind must be gbm, shared or blocks");

    const fs::path out = fs::path(cfg.output_dir) / ("panel_" + cfg.synth_kind + ".csv");
    save_prices(panel, out.string());

    nlohmann::json manifest{{"config_hash", hash_hex(cfg.hash())},
                            {"master_seed", cfg.seed},
                            {"kind", cfg.synth_kind},
                            {"assets", panel.assets()},
                            {"days", panel.days()},
                            {"weight", cfg.synth_weight},
                            {"blocks", cfg.synth_blocks},
                            {"rho", cfg.synth_rho},
                            {"panel", out.filename().string()}};
    write_text_file(fs::path(cfg.output_dir) / "synth_manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << out.string() << " (" << panel.assets() << " x " << panel.days()
              << ")\n";
    return 0;
}

// --------------------------------------------------------------- spectrum
int cmd_spectrum(const RunConfig& cfg) {
    cfg.validate(true);
    fs::create_directories(cfg.output_dir);
    const auto base = load_input_panel(cfg);
    const double beta = cfg.betas.front();
    const auto panel = build_beta_panel(base, beta, cfg.seed);

    SpectrumOptions sopt;
    sopt.kappa = cfg.kappa;
    sopt.manual_cutoff = cfg.manual_cutoff;
    sopt.n_outliers = cfg.n_outliers;
    sopt.q_fixed = cfg.q_fixed ? cfg.q_fixed
                               : std::optional<double>(static_cast<double>(panel.assets()) /
                                                       static_cast<double>(panel.days() - 1));
    const auto analysis =
        analyze_correlation_spectrum(correlation_matrix(log_returns(panel)), sopt);

    // eigenvalues.csv
    {
        std::ostringstream os;
        for (const auto& h : file_header(cfg)) os << "# " << h << "\n";
        os << "index,eigenvalue\n";
        for (std::size_t i = 0; i < analysis.decomposition.eigenvalues.size(); ++i)
            os << i << ',' << format_double(analysis.decomposition.eigenvalues[i]) << "\n";
        write_text_file(fs::path(cfg.output_dir) / "eigenvalues.csv", os.str());
    }

    // mp_fit.json
    {
        const auto [pm_lo, pm_hi] = mp_edges(analysis.plain_fit);
        const auto [rs_lo, rs_hi] = mp_edges(analysis.rescaled_fit);
        nlohmann::json j{
            {"config_hash", hash_hex(cfg.hash())},
            {"master_seed", cfg.seed},
            {"beta", beta},
            {"cutoff_index", analysis.cutoff.index},
            {"cutoff_degenerate", analysis.cutoff.degenerate},
            {"n_outliers", analysis.n_outliers},
            {"plain", {{"sigma2", analysis.plain_fit.sigma2}, {"q", analysis.plain_fit.q},
                       {"x_minus", pm_lo}, {"x_plus", pm_hi},
                       {"cdf_distance", analysis.plain_distance}}},
            {"rescaled", {{"sigma2", analysis.rescaled_fit.sigma2}, {"q", analysis.rescaled_fit.q},
                          {"x_minus", rs_lo}, {"x_plus", rs_hi},
                          {"cdf_distance", analysis.rescaled_distance}}}};
        write_text_file(fs::path(cfg.output_dir) / "mp_fit.json", j.dump(2) + "\n");
    }

    // spectrum.svg: histogram + both fitted densities + cutoff marker
    {
        const auto& eigs = analysis.decomposition.eigenvalues;
        const double lo = eigs.back(), hi = eigs.front();
        const std::size_t nbins = 60;
        PlotSpec plot;
        plot.title = "correlation spectrum (beta = " + std::to_string(beta) + ")";
        plot.x_label = "eigenvalue";
        plot.y_label = "density";
        plot.bar_edges.resize(nbins + 1);
        plot.bar_heights.assign(nbins, 0.0);
        const double width = (hi - lo) > 0 ? (hi - lo) : 1.0;
        for (std::size_t i = 0; i <= nbins; ++i)
            plot.bar_edges[i] = lo + width * static_cast<double>(i) / nbins;
        for (double x : eigs) {
            auto bin = static_cast<std::size_t>((x - lo) / width * nbins);
            plot.bar_heights[std::min(bin, nbins - 1)] += 1.0;
        }
        const double norm = 1.0 / (static_cast<double>(eigs.size()) * width / nbins);
        for (auto& h : plot.bar_heights) h *= norm;

        PlotSeries plain{"plain MP", {}, {}, "#1f77b4"};
        PlotSeries rescaled{"rescaled MP", {}, {}, "#2ca02c"};
        for (int k = 0; k <= 400; ++k) {
            const double x = lo + width * k / 400.0;
            plain.xs.push_back(x);
            plain.ys.push_back(mp_density(x, analysis.plain_fit));
            rescaled.xs.push_back(x);
            rescaled.ys.push_back(mp_density(x, analysis.rescaled_fit));
        }
        plot.series = {plain, rescaled};
        if (analysis.cutoff.index > 0 && analysis.cutoff.index < eigs.size()) {
            // Lambda_c marker halfway across the spike gap.
            plot.x_markers = {0.5 * (eigs[analysis.cutoff.index - 1] +
                                     eigs[analysis.cutoff.index])};
        }
        std::ostringstream os;
        write_svg_plot(os, plot);
        write_text_file(fs::path(cfg.output_dir) / "spectrum.svg", os.str());
    }
    std::cout << "spectrum: N_c = " << analysis.kinetic.size()
              << ", cutoff = " << analysis.cutoff.index
              << ", plain distance = " << analysis.plain_distance
              << ", rescaled distance = " << analysis.rescaled_distance << "\n";
    return 0;
}

// --------------------------------------------------------------- simulate
int cmd_simulate(const RunConfig& cfg) {
    cfg.validate(true);
    fs::create_directories(cfg.output_dir);
    const auto base = load_input_panel(cfg);
    const auto pot = PotentialParams::from_a0(cfg.a0, cfg.h1);

    nlohmann::json meta{{"config_hash", hash_hex(cfg.hash())},
                        {"master_seed", cfg.seed},
                        {"resolved_config", cfg.resolved_dump()},
                        {"cells", nlohmann::json::array()}};
    std::ostringstream divergence_log;
    divergence_log << "beta,temperature_ratio,realization,step,time\n";
    std::size_t diverged_total = 0;

    for (std::size_t bi = 0; bi < cfg.betas.size(); ++bi) {
        const double beta = cfg.betas[bi];
        const std::uint64_t cell_seed = derive_seed(cfg.seed, bi);
        const auto panel = build_beta_panel(base, beta, cell_seed);
        SpectrumOptions sopt;
        sopt.kappa = cfg.kappa;
        sopt.manual_cutoff = cfg.manual_cutoff;
        sopt.q_fixed = cfg.q_fixed ? cfg.q_fixed
                                   : std::optional<double>(
                                         static_cast<double>(panel.assets()) /
                                         static_cast<double>(panel.days() - 1));
        const auto analysis =
            analyze_correlation_spectrum(correlation_matrix(log_returns(panel)), sopt);
        const auto rho = SpectralDensity::from_kinetic(analysis.kinetic);
        const auto tc = critical_temperature(cfg.a0, rho);

        for (double ratio : cfg.temperature_ratios) {
            auto kc = kinetics_config(cfg, analysis.kinetic, pot, ratio * tc.value,
                                      derive_seed(cell_seed, 1000 + static_cast<std::uint64_t>(
                                                                       ratio * 1e6)));
            for (std::size_t mu : cfg.modes)
                if (mu < analysis.kinetic.size()) kc.tracked_modes.push_back(mu);
            const auto ens = integrate(analysis.kinetic, pot, kc);
            const std::string tag = cell_tag(beta, ratio);

            for (std::size_t r = 0; r < ens.n_realizations(); ++r)
                if (ens.diverged[r]) {
                    ++diverged_total;
                    divergence_log << format_double(beta) << ',' << format_double(ratio)
                                   << ',' << r << ',' << ens.divergence_step[r] << ','
                                   << format_double(ens.divergence_step[r] * ens.config.dt)
                                   << "\n";
                }

            PlotSpec fplot;
            fplot.title = "F_mu(t, 0), " + tag;
            fplot.x_label = "t";
            fplot.y_label = "F";
            fplot.log_x = true;
            fplot.log_y = true;
            const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"};

            if (ens.surviving() > 0) {
                const auto a = observable_a(ens);
                std::ostringstream os;
                write_series_csv(os, a, file_header(cfg));
                write_text_file(fs::path(cfg.output_dir) / ("a_of_t_" + tag + ".csv"),
                                os.str());

                const auto k_series = correlation_K(ens);
                std::ostringstream ok;
                write_series_csv(ok, k_series, file_header(cfg));
                write_text_file(fs::path(cfg.output_dir) / ("K_" + tag + ".csv"), ok.str());

                std::size_t color_idx = 0;
                for (std::size_t mu : kc.tracked_modes) {
                    const auto f = correlation_F(ens, mu);
                    std::ostringstream of;
                    write_series_csv(of, f, file_header(cfg));
                    write_text_file(fs::path(cfg.output_dir) /
                                        ("F_mu" + std::to_string(mu) + "_" + tag + ".csv"),
                                    of.str());
                    PlotSeries ps{"mu=" + std::to_string(mu), f.times, f.values,
                                  colors[color_idx++ % 5]};
                    fplot.series.push_back(std::move(ps));
                }

                PlotSpec aplot;
                aplot.title = "a(t), " + tag;
                aplot.x_label = "t";
                aplot.y_label = "a";
                aplot.series = {{"a(t)", a.times, a.values, "#1f77b4"},
                                {"a0", {a.times.front(), a.times.back()},
                                 {cfg.a0, cfg.a0}, "#d62728"}};
                std::ostringstream oa;
                write_svg_plot(oa, aplot);
                write_text_file(fs::path(cfg.output_dir) / ("a_of_t_" + tag + ".svg"),
                                oa.str());

                std::ostringstream ofp;
                write_svg_plot(ofp, fplot);
                write_text_file(fs::path(cfg.output_dir) / ("F_mu_" + tag + ".svg"),
                                ofp.str());

                PlotSpec kplot;
                kplot.title = "K(t), " + tag;
                kplot.x_label = "t";
                kplot.y_label = "K";
                kplot.log_x = true;
                kplot.log_y = true;
                kplot.series = {{"K(t)", k_series.times, k_series.values, "#1f77b4"}};
                std::ostringstream okp;
                write_svg_plot(okp, kplot);
                write_text_file(fs::path(cfg.output_dir) / ("K_" + tag + ".svg"), okp.str());
            }

            meta["cells"].push_back(nlohmann::json{
                {"beta", beta},
                {"temperature_ratio", ratio},
                {"temperature", kc.temperature},
                {"critical_temperature", tc.value},
                {"tc_excluded_modes", tc.excluded_modes},
                {"dt", kc.dt},
                {"steps", kc.steps},
                {"ensemble", kc.ensemble},
                {"surviving", ens.surviving()},
                {"n_modes", analysis.kinetic.size()},
                {"cutoff_index", analysis.cutoff.index}});
            if (ens.surviving() == 0)
                std::cerr << "warning: every realization diverged in cell " << tag << "\n";
        }
    }
    write_text_file(fs::path(cfg.output_dir) / "divergence_log.csv", divergence_log.str());
    write_text_file(fs::path(cfg.output_dir) / "metadata.json", meta.dump(2) + "\n");
    std::cout << "simulate: " << meta["cells"].size() << " cells, " << diverged_total
              << " diverged realizations\n";
    return 0;
}

// ---------------------------------------------------------------- analyze
int cmd_analyze(const RunConfig& cfg) {
    cfg.validate(true);
    fs::create_directories(cfg.output_dir);

    // Closed theory on a deterministic MP-sampled spectrum.
    nlohmann::json tails{{"config_hash", hash_hex(cfg.hash())},
                         {"master_seed", cfg.seed}};
    {
        const auto ks = mp_kinetic_spectrum({cfg.mp_sigma * cfg.mp_sigma, cfg.mp_q},
                                            cfg.mp_modes, cfg.lambda_cap);
        const auto rho = SpectralDensity::from_kinetic(ks);
        const auto tc = critical_temperature(cfg.a0, rho);
        const double dt = 0.4 / (2.0 * ks.lambda_max());
        TimeGrid grid{dt, static_cast<std::size_t>(cfg.volterra_horizon / dt)};
        const auto g_sub = solve_g_volterra(cfg.a0, 0.5 * tc.value, rho, grid);
        const auto fit = tail_exponent(g_sub, 0.25);

        std::ostringstream os;
        write_series_csv(os, g_sub, file_header(cfg));
        write_text_file(fs::path(cfg.output_dir) / "G_volterra.csv", os.str());

        PlotSpec gplot;
        gplot.title = "G(t), T = T_c/2, MP spectrum";
        gplot.x_label = "t";
        gplot.y_label = "G";
        gplot.log_x = true;
        gplot.log_y = true;
        gplot.series = {{"G(t)", g_sub.times, g_sub.values, "#1f77b4"}};
        std::ostringstream og;
        write_svg_plot(og, gplot);
        write_text_file(fs::path(cfg.output_dir) / "G_volterra.svg", og.str());

        tails["G_subcritical"] = {{"temperature_ratio", 0.5},
                                  {"exponent", fit.exponent},
                                  {"stderr", fit.std_error},
                                  {"curvature", fit.curvature},
                                  {"critical_temperature", tc.value}};
    }

    // Beta-sweep detection on the input panel.
    const auto base = load_input_panel(cfg);
    KineticsConfig kc;
    kc.ensemble = cfg.ensemble;
    kc.seed = cfg.seed;
    kc.initial_amplitude = detect_amplitude(cfg);
    kc.threads = cfg.threads;
    kc.dt = cfg.dt;
    kc.steps = cfg.steps;  // beta_sweep derives per-cell defaults when zero

    SweepOptions sweep;
    sweep.spectrum.kappa = cfg.kappa;
    sweep.spectrum.manual_cutoff = cfg.manual_cutoff;
    sweep.spectrum.n_outliers = cfg.n_outliers;
    sweep.spectrum.q_fixed = cfg.q_fixed;
    sweep.detect.threshold = cfg.threshold;
    sweep.detect.smooth_width = cfg.smooth_width;
    sweep.potential = PotentialParams::from_a0(cfg.a0, cfg.h1);
    sweep.horizon = cfg.horizon;

    const auto reports =
        beta_sweep(base, cfg.betas, cfg.modes, cfg.temperature_ratios, kc, sweep);

    {
        std::ostringstream os;
        write_reports_csv(os, reports, file_header(cfg));
        write_text_file(fs::path(cfg.output_dir) / "alpha_gamma.csv", os.str());
        nlohmann::json j = reports_to_json(reports);
        j["config_hash"] = hash_hex(cfg.hash());
        j["master_seed"] = cfg.seed;
        write_text_file(fs::path(cfg.output_dir) / "detection_report.json",
                        j.dump(2) + "\n");
        write_text_file(fs::path(cfg.output_dir) / "tail_exponents.json",
                        tails.dump(2) + "\n");
    }

    // Summary figures over beta: alpha, gamma and the second derivative per mode.
    {
        const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"};
        for (const char* metric : {"alpha", "gamma", "sd"}) {
            PlotSpec plot;
            plot.title = std::string(metric) + "(beta)";
            plot.x_label = "beta";
            plot.y_label = metric;
            std::size_t color_idx = 0;
            for (double ratio : cfg.temperature_ratios)
                for (std::size_t mu : cfg.modes) {
                    PlotSeries s;
                    s.name = "mu=" + std::to_string(mu) + " T/Tc=" + std::to_string(ratio);
                    s.color = colors[color_idx++ % 5];
                    for (const auto& r : reports) {
                        if (r.temperature_ratio != ratio) continue;
                        for (const auto& m : r.per_mode) {
                            if (m.mode != mu) continue;
                            if (std::string(metric) == "sd") {
                                s.xs.push_back(r.beta);
                                s.ys.push_back(m.second_derivative);
                            } else if (m.fit) {
                                s.xs.push_back(r.beta);
                                s.ys.push_back(std::string(metric) == "alpha" ? m.fit->alpha
                                                                              : m.fit->gamma);
                            }
                        }
                    }
                    plot.series.push_back(std::move(s));
                }
            std::ostringstream os;
            write_svg_plot(os, plot);
            const std::string fname = std::string(metric == std::string("sd")
                                                      ? "second_derivative"
                                                      : metric) +
                                      "_vs_beta.svg";
            write_text_file(fs::path(cfg.output_dir) / fname, os.str());
        }
    }
    std::cout << "analyze: " << reports.size() << " sweep cells written\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral-kinetics: phase-ordering kinetics on correlation spectra"};
    app.require_subcommand(1);

    std::string config_path, input_override, out_override;
    std::vector<double> beta_override, temp_override;
    std::vector<std::size_t> modes_override;
    std::int64_t seed_override = -1;

    app.add_option("--config", config_path, "key=value config file");
    app.add_option("--input", input_override, "input panel CSV");
    app.add_option("--out", out_override, "output directory");
    app.add_option("--beta", beta_override, "beta grid override");
    app.add_option("--temp-ratio", temp_override, "T/T_c grid override");
    app.add_option("--modes", modes_override, "mode index list override");
    app.add_option("--seed", seed_override, "master seed override");

    auto* sc_synth = app.add_subcommand("synth", "generate a synthetic panel");
    std::string synth_kind;
    sc_synth->add_option("--kind", synth_kind, "gbm | shared | blocks");
    auto* sc_spectrum = app.add_subcommand("spectrum", "spectrum + MP fits + cutoff");
    auto* sc_simulate = app.add_subcommand("simulate", "Langevin ensemble observables");
    auto* sc_analyze = app.add_subcommand("analyze", "closed theory + detection sweep");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        if (!input_override.empty()) cfg.input_path = input_override;
        if (!out_override.empty()) cfg.output_dir = out_override;
        if (!beta_override.empty()) cfg.betas = beta_override;
        if (!temp_override.empty()) cfg.temperature_ratios = temp_override;
        if (!modes_override.empty()) cfg.modes = modes_override;
        if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
        if (!synth_kind.empty()) cfg.synth_kind = synth_kind;

        if (sc_synth->parsed()) return cmd_synth(cfg);
        if (sc_spectrum->parsed()) return cmd_spectrum(cfg);
        if (sc_simulate->parsed()) return cmd_simulate(cfg);
        if (sc_analyze->parsed()) return cmd_analyze(cfg);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ComputeError& e) {
        std::cerr << "compute error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
