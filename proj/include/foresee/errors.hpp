#pragma once

#include <stdexcept>
#include <string>

namespace foresee {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two tensors (or a tensor and a graph) disagree on their dimensions.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A hyperparameter or option lies outside its documented range.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data is malformed: parse failures, ordering violations, unknown ids.
class DataError : public Error {
public:
    using Error::Error;
};

} // namespace foresee
