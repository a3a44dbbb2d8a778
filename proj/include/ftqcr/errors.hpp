#pragma once

#include <stdexcept>
#include <string>

namespace ftqcr {

// Bad user input: config files, CLI values, malformed specs. CLI maps this
// to exit code 1.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// The model itself cannot deliver: target unreachable, search bracket
// exhausted, disconnected routing graph. CLI maps this to exit code 2.
struct ModelError : std::runtime_error {
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ftqcr
