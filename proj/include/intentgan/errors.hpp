#pragma once

#include <stdexcept>
#include <string>

namespace intentgan {

/// Base for every error raised by the library. `exit_code()` is the process
/// status the command-line tool reports for this category.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 1; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class DataError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

// A feature source that cannot serve an utterance (id out of range, dim mismatch).
class BindingError : public DataError {
public:
    using DataError::DataError;
};

class CheckpointError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

class NumericError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 5; }
};

}  // namespace intentgan
