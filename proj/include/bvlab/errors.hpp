#pragma once

#include <stdexcept>
#include <string>

namespace bvlab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: wrong dimensions, non-finite entries, bad arguments.
class InputError : public Error {
public:
    using Error::Error;
};

/// A grid is too coarse for the requested ball or mollifier.
class ResolutionError : public Error {
public:
    using Error::Error;
};

/// Numerically singular input (e.g. a rank-deficient Gram matrix).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/// A mathematical precondition fails: non-elliptic operator, missing FDN, ...
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain of a map (e.g. the multiplier at xi = 0).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Data that must lie in the image of the operator does not.
class NotInRangeError : public Error {
public:
    using Error::Error;
};

/// Field specification that cannot be realized.
class SpecError : public Error {
public:
    using Error::Error;
};

/// Configuration / file parsing failure.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace bvlab
