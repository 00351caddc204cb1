#pragma once

#include <stdexcept>
#include <string>

namespace autowu {

// Base of every error thrown by the library. Callers that only need to know
// "something in autowu failed" can catch this; the derived types name the
// specific contract that was violated.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

// numerics
class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

class KTooLarge : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

// gp
class FitDiverged : public Error {
public:
    using Error::Error;
};

// detector / schedule
class NonFiniteLoss : public Error {
public:
    using Error::Error;
};

class NonContiguousStep : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

class StepBeyondTotal : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

// optim
class ShapeMismatch : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

// train / synthgen / config
class InvalidSpec : public Error {
public:
    using Error::Error;
};

class ConfigInvalid : public Error {
public:
    ConfigInvalid(std::string field, const std::string& reason)
        : Error(field + ": " + reason), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class IOFailure : public Error {
public:
    using Error::Error;
};

class MissingLog : public IOFailure {
public:
    using IOFailure::IOFailure;
};

} // namespace autowu
