#pragma once

#include <stdexcept>
#include <string>

namespace mdsc {

// Every failure surfaced by the library derives from Error so callers can
// catch broadly, while tests can pin the precise category.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error { public: using Error::Error; };
class RangeError : public Error { public: using Error::Error; };
class LookupError : public Error { public: using Error::Error; };
class DimensionError : public Error { public: using Error::Error; };
class LengthError : public Error { public: using Error::Error; };
class FormatError : public Error { public: using Error::Error; };
class ValidationError : public Error { public: using Error::Error; };
class PersistenceError : public Error { public: using Error::Error; };
class CheckpointFormatError : public Error { public: using Error::Error; };
class InvalidMeasurementError : public Error { public: using Error::Error; };
class UndefinedRateError : public Error { public: using Error::Error; };

class UnencodableInputError : public Error {
public:
    UnencodableInputError(const std::string& what, std::string offending)
        : Error(what), offending_(std::move(offending)) {}
    const std::string& offending() const noexcept { return offending_; }

private:
    std::string offending_;
};

class UnmappableCodeError : public Error { public: using Error::Error; };

class DataExhaustedError : public Error {
public:
    DataExhaustedError(const std::string& what, std::string task)
        : Error(what), task_(std::move(task)) {}
    const std::string& task() const noexcept { return task_; }

private:
    std::string task_;
};

}  // namespace mdsc
