#pragma once

#include <stdexcept>
#include <string>

namespace inrsteg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor or batch shapes do not agree with the owning architecture.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A media or model file could not be parsed.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A stego plan or recipe violates a placement invariant.
class PlanError : public Error {
public:
    using Error::Error;
};

/// Invalid argument outside of shape handling (bad key length, bad schedule).
class ArgumentError : public Error {
public:
    using Error::Error;
};

}  // namespace inrsteg
