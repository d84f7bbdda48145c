#pragma once

#include <stdexcept>
#include <string>

namespace evp {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Objects of different torus dimension were mixed in one call.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// sin(pi*q*alpha) is numerically zero; the closed forms are undefined.
class ResonantAngle : public Error {
public:
    using Error::Error;
};

/// An experiment configuration failed schema validation.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A bounded search ran out of its cap or work budget.
class SearchExhausted : public Error {
public:
    using Error::Error;
};

} // namespace evp
