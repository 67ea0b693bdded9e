// Error taxonomy shared across the library. Configuration and input problems
// are distinguished from runtime computational failures so the CLI can map
// them to distinct exit codes (2 and 1 respectively).
#pragma once

#include <stdexcept>
#include <string>

namespace speckin {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ComputeError : std::runtime_error {
    explicit ComputeError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace speckin
