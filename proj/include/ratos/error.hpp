#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace ratos {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Sampling too coarse for the requested feature.
class ResolutionError : public Error {
public:
    using Error::Error;
};

/// Time/space grid violates a stability or consistency constraint.
class GridError : public Error {
public:
    using Error::Error;
};

/// Grid refinement changed the result by more than the tolerance.
class AccuracyError : public Error {
public:
    using Error::Error;
};

/// Metric requested on a channel carrying no light.
class EmptyPulseError : public Error {
public:
    using Error::Error;
};

/// Least-squares setup or convergence failure.
class FitError : public Error {
public:
    using Error::Error;
};

/// Experiment preconditions violated (e.g. the pulse escapes too early).
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// Config document problems; carries the 1-based source line and column (0 if none).
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0, int column = 0)
        : Error(location(line, column) + what), line_(line), column_(column) {}
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    static std::string location(int line, int column) {
        if (line <= 0) return column > 0 ? "column " + std::to_string(column) + ": " : "";
        std::string s = "line " + std::to_string(line);
        if (column > 0) s += ", column " + std::to_string(column);
        return s + ": ";
    }
    int line_;
    int column_;
};

/// Number for error messages, 6 significant digits.
inline std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

/// True for errors a CLI should report as physics/grid failures (exit 2).
inline bool is_physics_error(const Error& e) noexcept {
    return dynamic_cast<const DomainError*>(&e) || dynamic_cast<const ResolutionError*>(&e) ||
           dynamic_cast<const GridError*>(&e) || dynamic_cast<const AccuracyError*>(&e) ||
           dynamic_cast<const EmptyPulseError*>(&e) || dynamic_cast<const FitError*>(&e) ||
           dynamic_cast<const ProtocolError*>(&e);
}

}  // namespace ratos
