#pragma once

#include <stdexcept>
#include <string>

namespace kacgame {

/// Machine-readable error category, reported by the CLI on failure.
enum class ErrorKind {
    Config,
    InvalidArgument,
    NotCoordinationGame,
    Resolution,
    Unsupported,
    Instability,
    RateBound,
    MultiInterface,
    NotStationary,
    Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace kacgame
