// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace ptqtp {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller passed a bad argument (out of range, inconsistent flags, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

// Operands have incompatible shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

// The 2x2 normal matrix has det == 0. Only reachable with lambda == 0.
class SingularSystemError : public Error {
public:
    using Error::Error;
};

// Input data is malformed: non-finite values, reserved trit code, bad header,
// truncated payload.
class DataError : public Error {
public:
    using Error::Error;
};

class CorruptDataError : public DataError {
public:
    using DataError::DataError;
};

class TruncatedDataError : public DataError {
public:
    using DataError::DataError;
};

}  // namespace ptqtp
