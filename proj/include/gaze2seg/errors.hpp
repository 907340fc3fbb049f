#pragma once

#include <stdexcept>
#include <string>

namespace g2s {

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConvergenceError : std::runtime_error {
    explicit ConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when none of the four axis rays detects a gradient boundary.
struct NoBoundaryFound : std::runtime_error {
    explicit NoBoundaryFound(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace g2s
