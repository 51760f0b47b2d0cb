#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vinesim {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise malformed numeric input.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A requested tip position cannot be produced by any arc of the given length.
class OutOfWorkspace : public Error {
public:
    using Error::Error;
};

/// Inconsistent configuration (degenerate actuator layout, non-positive gains, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Course or log document does not follow the schema. `path()` is a JSON pointer.
class ParseError : public Error {
public:
    ParseError(std::string path, const std::string& what)
        : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Course parsed but violates an invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A replayed run diverged from its recorded hash chain.
class ReplayIntegrityError : public Error {
public:
    ReplayIntegrityError(std::uint64_t tick, const std::string& what)
        : Error("tick " + std::to_string(tick) + ": " + what), tick_(tick) {}
    std::uint64_t tick() const noexcept { return tick_; }

private:
    std::uint64_t tick_;
};

}  // namespace vinesim
