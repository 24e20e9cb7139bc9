#pragma once

#include <stdexcept>
#include <string>

namespace docfsl {

// Bad inputs: manifests, images, model files, incompatible checkpoints.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// NaN/Inf or diverging numerics; aborts the run.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration or flags.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace docfsl
