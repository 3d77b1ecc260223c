#pragma once

#include <stdexcept>
#include <string>

namespace sss {

// Malformed shapes: wrong vector length, index out of range.
class StructuralError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A precondition on a valid object was violated (e.g. a Dag breaks a constraint).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Singular or non positive definite numerics in the data.
class DegenerateDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid run parameters or too few rows.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Unparseable user input (CSV, constraint files, JSON).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Too many subsets failed to fit.
class RunQualityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Refusal to run an exponential routine on a large input.
class RefusalError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Rates computed on an empty class.
class UndefinedRateError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

} // namespace sss
