#pragma once

#include <stdexcept>
#include <string>

namespace mesofluct {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A numerical routine failed or produced an untrustworthy result
/// (singular solve, resonance, non-convergent quadrature, envelope violation).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// An index computation left the range of SiteIndex.
class IndexOverflow : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) throw InvalidArgument(message);
}

}  // namespace detail

}  // namespace mesofluct
