#pragma once

#include <stdexcept>
#include <string>

namespace nwhittle {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter or input violated a documented precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A spectrum model produced a non-positive or undefined C_l.
class ModelError : public Error {
public:
    using Error::Error;
};

/// Requested multipoles or scales are not covered by the data.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature hit its depth limit before meeting the tolerance.
class QuadratureError : public Error {
public:
    QuadratureError(const std::string& what, double achieved)
        : Error(what + " (achieved error estimate " + std::to_string(achieved) + ")"),
          achieved_(achieved) {}

    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// The estimator could not produce a finite objective.
class EstimationError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidArgument(msg);
}

}  // namespace detail
}  // namespace nwhittle
