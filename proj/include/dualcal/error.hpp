#ifndef DUALCAL_ERROR_HPP
#define DUALCAL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace dualcal {

/// Thrown when a caller hands in values outside an operation's domain
/// (non-finite logits, T <= 0, out-of-range labels, ...).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed external data, e.g. a logits file with a bad row.
class DataError : public std::runtime_error {
public:
    DataError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A numerical procedure could not establish its precondition
/// (root not bracketed, training diverged, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dualcal

#endif  // DUALCAL_ERROR_HPP
