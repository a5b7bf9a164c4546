#pragma once

#include <stdexcept>
#include <string>

namespace flaresim {

// Invalid configuration (bad JSON, unknown keys, out-of-range values).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable/unwritable/malformed input data (files, images, dumps).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace flaresim
