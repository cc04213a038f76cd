#pragma once

#include <stdexcept>
#include <string>

namespace reff {

/// Bad argument: out-of-range index, size mismatch, violated precondition.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A dense or subset cap was exceeded.
class CapExceeded : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Non-finite cost, gradient or amplitude.
class NumericFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent file contents.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Configuration failed schema validation.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
inline void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}
}  // namespace detail

}  // namespace reff
