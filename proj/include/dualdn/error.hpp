#pragma once

#include <stdexcept>
#include <string>

namespace dualdn {

// Precondition violations on in-memory inputs (bad shapes, out-of-range args).
class InvalidInput : public std::runtime_error {
public:
    explicit InvalidInput(const std::string& msg) : std::runtime_error(msg) {}
};

// Problems with files and external data (parse errors, malformed records).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Inconsistent model/configuration settings (dimension mismatches etc.).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values where finite ones are required (diverged optimization).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dualdn
