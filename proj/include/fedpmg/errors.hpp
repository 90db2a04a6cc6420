#pragma once

#include <stdexcept>
#include <string>

namespace fedpmg {

// Error taxonomy used across the library. Everything derives from
// std::runtime_error so callers can catch coarsely or precisely.

struct InvalidInput : std::runtime_error {
    explicit InvalidInput(const std::string& msg) : std::runtime_error("invalid input: " + msg) {}
};

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error("shape mismatch: " + msg) {}
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error("format error: " + msg) {}
};

struct MissingModalityError : std::runtime_error {
    explicit MissingModalityError(const std::string& msg)
        : std::runtime_error("missing modality: " + msg) {}
};

struct AggregationError : std::runtime_error {
    explicit AggregationError(const std::string& msg)
        : std::runtime_error("aggregation error: " + msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error("config error: " + msg) {}
};

}  // namespace fedpmg
