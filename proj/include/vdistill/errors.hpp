#pragma once

#include <stdexcept>
#include <string>

namespace vdistill {

// Precondition / invariant violation in a public operation.
struct ContractError : std::logic_error {
    explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// Invalid or inconsistent configuration.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Base for container / file format problems.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct BadMagicError : IoError {
    explicit BadMagicError(const std::string& msg) : IoError("bad magic: " + msg) {}
};

struct VersionMismatchError : IoError {
    explicit VersionMismatchError(const std::string& msg) : IoError("version mismatch: " + msg) {}
};

struct TruncatedError : IoError {
    explicit TruncatedError(const std::string& msg) : IoError("truncated payload: " + msg) {}
};

// Numeric divergence (NaN loss etc.) during an optimization loop.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace vdistill
