#pragma once

#include <stdexcept>
#include <string>

namespace kvd {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid parameters or configuration (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Pole proximity, strip violations, truncation budget exhausted (CLI exit code 3).
class DomainError : public Error {
public:
    using Error::Error;
};

// Square-root continuation could not keep a consistent sheet.
class BranchError : public DomainError {
public:
    using DomainError::DomainError;
};

}  // namespace kvd
