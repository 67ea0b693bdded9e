// Run configuration: line-oriented key=value files with [section] headers,
// CLI flag overrides, validation, and an FNV-1a hash of the resolved state
// that every output file embeds for reproducibility audits.
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "speckin/errors.hpp"

namespace speckin {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        std::size_t used = 0;
        const double v = std::stod(item, &used);
        if (used != item.size()) throw ConfigError("bad numeric list item '" + item + "'");
        out.push_back(v);
    }
    return out;
}

inline std::vector<std::size_t> parse_index_list(const std::string& s) {
    std::vector<std::size_t> out;
    for (double v : parse_double_list(s)) {
        if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
            throw ConfigError("bad index list entry");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

} // namespace detail

struct RunConfig {
    // [input]
    std::string input_path;
    double min_coverage = 1.0;

    // [grid]
    std::vector<double> betas = {0.0};
    std::vector<double> temperature_ratios = {0.1};
    std::vector<std::size_t> modes = {0, 1};

    // [spectrum]
    double kappa = 10.0;
    std::optional<double> q_fixed;       // default: N/(P-1) of the panel
    std::optional<std::size_t> manual_cutoff;
    std::optional<std::size_t> n_outliers;

    // [potential]
    double a0 = 2.0;
    double h1 = 0.5;

    // [kinetics]
    double dt = 0.0;          // 0 = automatic
    std::size_t steps = 0;    // 0 = derive from horizon
    double horizon = 3.5;     // solver-time length when steps == 0
    std::size_t ensemble = 100;
    double initial_amplitude = 0.0;  // 0 = sqrt(a0)
    unsigned threads = 0;

    // [detect]
    double threshold = 1.0;
    std::size_t smooth_width = 3;

    // [analytics]
    double volterra_horizon = 60.0;
    std::size_t mp_modes = 1000;   // discrete MP sample size for theory runs
    double mp_sigma = 1.0;
    double mp_q = 0.5;
    double lambda_cap = 20.0;

    // [synth]
    std::string synth_kind = "gbm";  // gbm | shared | blocks
    std::size_t synth_assets = 20;
    std::size_t synth_days = 250;
    double synth_weight = 0.95;
    std::size_t synth_blocks = 2;
    double synth_rho = 0.6;

    // [output]
    std::string output_dir = "out";
    std::uint64_t seed = 1;

    void apply(const std::string& key, const std::string& value);
    void validate(bool needs_input) const;
    std::string resolved_dump() const;
    std::uint64_t hash() const;
};

inline void RunConfig::apply(const std::string& key, const std::string& value) {
    using detail::parse_double_list;
    using detail::parse_index_list;
    try {
        if (key == "input.path") input_path = value;
        else if (key == "input.min_coverage") min_coverage = std::stod(value);
        else if (key == "grid.betas") betas = parse_double_list(value);
        else if (key == "grid.temperature_ratios") temperature_ratios = parse_double_list(value);
        else if (key == "grid.modes") modes = parse_index_list(value);
        else if (key == "spectrum.kappa") kappa = std::stod(value);
        else if (key == "spectrum.q") q_fixed = std::stod(value);
        else if (key == "spectrum.manual_cutoff") manual_cutoff = std::stoul(value);
        else if (key == "spectrum.n_outliers") n_outliers = std::stoul(value);
        else if (key == "potential.a0") a0 = std::stod(value);
        else if (key == "potential.h1") h1 = std::stod(value);
        else if (key == "kinetics.dt") dt = std::stod(value);
        else if (key == "kinetics.steps") steps = std::stoul(value);
        else if (key == "kinetics.horizon") horizon = std::stod(value);
        else if (key == "kinetics.ensemble") ensemble = std::stoul(value);
        else if (key == "kinetics.initial_amplitude") initial_amplitude = std::stod(value);
        else if (key == "kinetics.threads") threads = static_cast<unsigned>(std::stoul(value));
        else if (key == "detect.threshold") threshold = std::stod(value);
        else if (key == "detect.smooth_width") smooth_width = std::stoul(value);
        else if (key == "analytics.volterra_horizon") volterra_horizon = std::stod(value);
        else if (key == "analytics.mp_modes") mp_modes = std::stoul(value);
        else if (key == "analytics.mp_sigma") mp_sigma = std::stod(value);
        else if (key == "analytics.mp_q") mp_q = std::stod(value);
        else if (key == "analytics.lambda_cap") lambda_cap = std::stod(value);
        else if (key == "synth.kind") synth_kind = value;
        else if (key == "synth.assets") synth_assets = std::stoul(value);
        else if (key == "synth.days") synth_days = std::stoul(value);
        else if (key == "synth.weight") synth_weight = std::stod(value);
        else if (key == "synth.blocks") synth_blocks = std::stoul(value);
        else if (key == "synth.rho") synth_rho = std::stod(value);
        else if (key == "output.dir") output_dir = value;
        else if (key == "output.seed") seed = std::stoull(value);
        else throw ConfigError("unknown config key '" + key + "'");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("bad value for config key '" + key + "': '" + value + "'");
    }
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = detail::trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string value = detail::trim(t.substr(eq + 1));
        base.apply(section.empty() ? key : section + "." + key, value);
    }
    return base;
}

inline void RunConfig::validate(bool needs_input) const {
    if (needs_input) {
        if (input_path.empty()) throw ConfigError("no input path configured");
        if (!std::filesystem::exists(input_path))
            throw ConfigError("input file does not exist: '" + input_path + "'");
    }
    if (betas.empty() || temperature_ratios.empty() || modes.empty())
        throw ConfigError("empty parameter grid");
    for (double b : betas)
        if (!(b >= -1.0 && b <= 1.0)) throw ConfigError("beta outside [-1, 1]");
    if (!(a0 > 0.0) || !(h1 > 0.0)) throw ConfigError("potential requires a0 > 0, h1 > 0");
    if (ensemble < 1) throw ConfigError("ensemble must be >= 1");
    if (!(min_coverage > 0.0 && min_coverage <= 1.0))
        throw ConfigError("min_coverage must lie in (0, 1]");
    if (smooth_width % 2 == 0) throw ConfigError("smooth_width must be odd");
}

inline std::string RunConfig::resolved_dump() const {
    std::ostringstream os;
    os << "input.path=" << input_path << "\ninput.min_coverage=" << min_coverage << "\n";
    os << "grid.betas=";
    for (std::size_t i = 0; i < betas.size(); ++i) os << (i ? "," : "") << betas[i];
    os << "\ngrid.temperature_ratios=";
    for (std::size_t i = 0; i < temperature_ratios.size(); ++i)
        os << (i ? "," : "") << temperature_ratios[i];
    os << "\ngrid.modes=";
    for (std::size_t i = 0; i < modes.size(); ++i) os << (i ? "," : "") << modes[i];
    os << "\nspectrum.kappa=" << kappa;
    if (q_fixed) os << "\nspectrum.q=" << *q_fixed;
    if (manual_cutoff) os << "\nspectrum.manual_cutoff=" << *manual_cutoff;
    if (n_outliers) os << "\nspectrum.n_outliers=" << *n_outliers;
    os << "\npotential.a0=" << a0 << "\npotential.h1=" << h1;
    os << "\nkinetics.dt=" << dt << "\nkinetics.steps=" << steps
       << "\nkinetics.horizon=" << horizon << "\nkinetics.ensemble=" << ensemble
       << "\nkinetics.initial_amplitude=" << initial_amplitude;
    os << "\ndetect.threshold=" << threshold << "\ndetect.smooth_width=" << smooth_width;
    os << "\nanalytics.volterra_horizon=" << volterra_horizon
       << "\nanalytics.mp_modes=" << mp_modes << "\nanalytics.mp_sigma=" << mp_sigma
       << "\nanalytics.mp_q=" << mp_q << "\nanalytics.lambda_cap=" << lambda_cap;
    os << "\nsynth.kind=" << synth_kind << "\nsynth.assets=" << synth_assets
       << "\nsynth.days=" << synth_days << "\nsynth.weight=" << synth_weight
       << "\nsynth.blocks=" << synth_blocks << "\nsynth.rho=" << synth_rho;
    os << "\noutput.dir=" << output_dir << "\noutput.seed=" << seed << "\n";
    return os.str();
}

inline std::uint64_t RunConfig::hash() const {
    const std::string dump = resolved_dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace speckin
