// DetectionReport serialization: versioned JSON plus a flat CSV with one row
// per (beta, T/T_c, mode).
#pragma once

#include <ostream>
#include <vector>

#include "json.hpp"

#include "speckin/csv.hpp"
#include "speckin/detect.hpp"

namespace speckin {

inline nlohmann::json report_to_json(const DetectionReport& r) {
    nlohmann::json modes = nlohmann::json::array();
    for (const auto& m : r.per_mode) {
        nlohmann::json jm{{"mode", m.mode},
                          {"second_derivative_max", m.second_derivative},
                          {"verdict", verdict_name(m.verdict)}};
        if (m.fit) {
            jm["fit"] = {{"alpha", m.fit->alpha},     {"gamma", m.fit->gamma},
                         {"amplitude", m.fit->amplitude}, {"r2", m.fit->r2},
                         {"t_lo", m.fit->t_lo},       {"t_hi", m.fit->t_hi},
                         {"condition", m.fit->condition}};
        }
        modes.push_back(std::move(jm));
    }
    return nlohmann::json{{"beta", r.beta},
                          {"temperature_ratio", r.temperature_ratio},
                          {"critical_temperature", r.critical_temperature},
                          {"per_mode", std::move(modes)}};
}

inline nlohmann::json reports_to_json(const std::vector<DetectionReport>& reports) {
    nlohmann::json out{{"schema_version", 1}};
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) arr.push_back(report_to_json(r));
    out["reports"] = std::move(arr);
    return out;
}

inline void write_reports_csv(std::ostream& os, const std::vector<DetectionReport>& reports,
                              const std::vector<std::string>& header = {}) {
    for (const auto& h : header) os << "# " << h << "\n";
    os << "beta,temperature_ratio,mode,alpha,gamma,amplitude,r2,second_derivative_max,verdict\n";
    for (const auto& r : reports)
        for (const auto& m : r.per_mode) {
            os << format_double(r.beta) << ',' << format_double(r.temperature_ratio) << ','
               << m.mode << ',';
            if (m.fit)
                os << format_double(m.fit->alpha) << ',' << format_double(m.fit->gamma) << ','
                   << format_double(m.fit->amplitude) << ',' << format_double(m.fit->r2);
            else
                os << ",,,";
            os << ',' << format_double(m.second_derivative) << ',' << verdict_name(m.verdict)
               << "\n";
        }
}

} // namespace speckin
