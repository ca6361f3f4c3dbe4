#pragma once

#include <stdexcept>
#include <string>

namespace circamood {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data is malformed, insufficient or inconsistent.
class DataError : public Error {
public:
    using Error::Error;
};

/// The caller asked for something the interface does not accept.
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace circamood
