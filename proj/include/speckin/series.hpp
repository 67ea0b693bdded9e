// Time-indexed ensemble observables and their CSV/JSON serialization
// (columns: t, value, n_realizations).
#pragma once

#include <cmath>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "speckin/csv.hpp"

namespace speckin {

struct ObservableSeries {
    std::vector<double> times;
    std::vector<double> values;
    std::size_t realization_count = 0;
    std::string label;  // one of: a, F_mu, K, G, a_closed, H

    void validate() const {
        if (times.size() != values.size())
            throw std::invalid_argument("ObservableSeries: times/values length mismatch");
        for (double v : values)
            if (!std::isfinite(v))
                throw std::invalid_argument("ObservableSeries: non-finite value");
    }

    std::size_t size() const { return times.size(); }
};

// Optional `header` lines are emitted as '#' comments before the column row.
inline void write_series_csv(std::ostream& os, const ObservableSeries& s,
                             const std::vector<std::string>& header = {}) {
    for (const auto& h : header) os << "# " << h << "\n";
    os << "t,value,n_realizations\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        os << format_double(s.times[i]) << ',' << format_double(s.values[i]) << ','
           << s.realization_count << "\n";
}

inline void write_series_json(std::ostream& os, const ObservableSeries& s) {
    os << "{\"label\":\"" << s.label << "\",\"realization_count\":" << s.realization_count
       << ",\"times\":[";
    for (std::size_t i = 0; i < s.size(); ++i)
        os << (i ? "," : "") << format_double(s.times[i]);
    os << "],\"values\":[";
    for (std::size_t i = 0; i < s.size(); ++i)
        os << (i ? "," : "") << format_double(s.values[i]);
    os << "]}";
}

} // namespace speckin
