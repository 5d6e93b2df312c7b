// Exception types shared across the library.
#pragma once

#include <stdexcept>
#include <string>

namespace kantherm {

/// Bad or missing configuration (rosters, spaces, CLI options).
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file; carries the offending line when known.
class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& msg, long line = -1)
        : std::runtime_error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_(line) {}

    [[nodiscard]] long line() const { return line_; }

private:
    long line_;
};

/// Tensor/vector arity mismatch between caller and model.
class shape_error : public std::invalid_argument {
public:
    explicit shape_error(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Numerical failure during ODE integration; carries the simulation time.
class integration_error : public std::runtime_error {
public:
    integration_error(const std::string& msg, double t)
        : std::runtime_error(msg + " at t=" + std::to_string(t)), time_(t) {}

    [[nodiscard]] double time() const { return time_; }

private:
    double time_;
};

/// Numerical failure during training (non-finite loss or gradient).
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Unreadable or corrupt model/data file.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace kantherm
