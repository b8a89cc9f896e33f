#pragma once

#include <stdexcept>
#include <string>

namespace causalfuzz {

// Bad user input: malformed files, invalid flags, violated preconditions.
// The CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Query budget can no longer cover the requested batch.
struct BudgetExhausted : std::runtime_error {
    explicit BudgetExhausted(const std::string& msg) : std::runtime_error(msg) {}
};

// Predictor input does not match the model's feature schema.
struct SchemaMismatch : std::runtime_error {
    explicit SchemaMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

// Remote predictor transport failure after retries.
struct TransportError : std::runtime_error {
    explicit TransportError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace causalfuzz
